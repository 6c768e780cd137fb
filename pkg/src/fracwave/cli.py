"""Command-line entry point: ``fracwave run|converge|harmonic|reference <config>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .esim import NewtonFailure
from .fracture import InadmissibleStress
from .harness.config import load_config
from .harness import experiments
from .model import ConfigError
from .scheme import NumericBlowup

EXIT_OK, EXIT_CONFIG, EXIT_NEWTON, EXIT_BLOWUP = 0, 2, 3, 4

log = logging.getLogger("fracwave")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracwave",
                                description="1-D elastic waves across a nonlinear fracture")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "pulse transmission (snapshots + interface history)"),
                        ("converge", "L1 convergence study against the reference"),
                        ("harmonic", "sinusoidal source, Fourier harmonics at a station"),
                        ("reference", "semi-analytical solution only")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", type=Path)
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--order", type=int, choices=(2, 4))
        sp.add_argument("--n", type=int, help="number of grid nodes")
        sp.add_argument("--v0", type=float, help="target peak velocity (m/s)")
        sp.add_argument("--dump-operators", type=Path, metavar="FILE",
                        help="write the jump operators D_m in prefix form")
    return p


_EXPERIMENT = {"run": "ivp", "converge": "convergence", "harmonic": "harmonic",
               "reference": "ivp"}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"order": args.order, "n": args.n, "v0": args.v0,
                                        "output_dir": args.out})
        kind = _EXPERIMENT[args.command]
        if cfg.experiment != kind and not (args.command == "reference"
                                           and cfg.experiment == "convergence"):
            cfg = cfg.replace(experiment=kind).validate()
        out = cfg.output_dir
        if args.dump_operators:
            _dump_operators(cfg, args.dump_operators)
        if args.command == "run":
            result = experiments.run_ivp(cfg)
            print(f"min [u] = {result.min_jump:.6e} m, energy drift = {result.energy_drift:.3e}")
        elif args.command == "converge":
            result = experiments.run_convergence(cfg)
            for n, dx, err, order in result.table.rows():
                print(f"n = {n:5d}  dx = {dx:.6g}  L1 = {err:.6e}  order = {order:.3f}")
            print(f"least-squares slope = {result.table.slope():.3f}")
        elif args.command == "harmonic":
            result = experiments.run_harmonic(cfg)
            print("normalised harmonics:", " ".join(f"{a:.4e}" for a in result.spectrum.amplitudes))
        else:
            result = experiments.run_reference(cfg)
        for path in result.save(out):
            log.info("wrote %s", path)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (NewtonFailure, InadmissibleStress) as err:
        print(f"interface solve failed: {err}", file=sys.stderr)
        return EXIT_NEWTON
    except NumericBlowup as err:
        print(f"numerical blow-up: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def _dump_operators(cfg, path: Path) -> None:
    from .fracture import build_jump_operators

    if cfg.fracture is None:
        raise ConfigError("no fracture configured, nothing to dump")
    ops = build_jump_operators(cfg.fracture, cfg.left, cfg.right, 2 * cfg.esim.k - 1)
    ops.dump(path)


if __name__ == "__main__":
    sys.exit(main())
