"""Run configuration: TOML file -> validated :class:`SimConfig`.

Schema (SI units throughout)::

    [medium.left]   rho, c
    [medium.right]  rho, c
    [fracture]      alpha, K, d, sigma_bar?, h_bar?      (omit for no fracture)
    [grid]          x_min, x_max, n, cfl
    [wavelet]       f_c, t0, and one of epsilon | v0
    [source]        x_s, f_c, and one of epsilon | v0     (harmonic runs)
    [run]           experiment = "ivp" | "convergence" | "harmonic"
                    order = 2 | 4, k?, regularity, final_time,
                    snapshot_times, stations, output_dir,
                    newton_tol, newton_max_iter, damping,
                    convergence_n, harmonics, settle_periods, record_periods,
                    dt_ode?
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..esim import EsimConfig, select_k
from ..model import (ConfigError, FractureParams, Grid, MaterialParams, SourceSpec,
                     WaveletSpec, epsilon_for_peak_velocity, initial_support,
                     source_epsilon_for_velocity)

EXPERIMENTS = ("ivp", "convergence", "harmonic")


@dataclass(frozen=True)
class SimConfig:
    left: MaterialParams
    right: MaterialParams
    fracture: FractureParams | None
    grid: Grid
    order: int = 4
    esim: EsimConfig | None = None
    experiment: str = "ivp"
    wavelet: WaveletSpec | None = None
    source: SourceSpec | None = None
    v0: float | None = None
    final_time: float | None = None
    snapshot_times: tuple[float, ...] = ()
    stations: tuple[float, ...] = ()
    output_dir: Path = Path("out")
    convergence_n: tuple[int, ...] = (200, 400, 800, 1600)
    harmonics: int = 8
    settle_periods: int = 5
    record_periods: int = 8
    dt_ode: float | None = None
    regularity: int = 6

    @property
    def media(self) -> tuple[MaterialParams, MaterialParams]:
        return (self.left, self.right)

    @property
    def c_max(self) -> float:
        return max(self.left.c, self.right.c)

    def validate(self) -> SimConfig:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.order not in (2, 4):
            raise ConfigError("order must be 2 or 4")
        g = self.grid
        for x in self.stations:
            if not g.x_min < x < g.x_max:
                raise ConfigError(f"station {x} m lies outside the domain")
        if self.experiment in ("ivp", "convergence"):
            if self.wavelet is None:
                raise ConfigError(f"{self.experiment} runs need a [wavelet] section")
            if self.final_time is None or self.final_time <= self.wavelet.t0:
                raise ConfigError("run.final_time must exceed wavelet.t0")
            lo, hi = initial_support(self.wavelet, self.left)
            if self.fracture is not None and hi > self.fracture.alpha:
                raise ConfigError("initial pulse support overlaps the fracture")
            if lo < g.x_min:
                raise ConfigError("initial pulse support leaves the domain")
        if self.experiment == "harmonic":
            if self.source is None:
                raise ConfigError("harmonic runs need a [source] section")
            if self.fracture is not None and not self.source.x_s < self.fracture.alpha:
                raise ConfigError("the source must lie left of the fracture")
            if not self.stations:
                raise ConfigError("harmonic runs need at least one station")
        return self

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)

    def with_n(self, n: int) -> SimConfig:
        g = self.grid
        return self.replace(grid=Grid.from_cfl(g.x_min, g.x_max, n, g.cfl, self.c_max))

    def with_order(self, order: int) -> SimConfig:
        s = order // 2
        k = select_k(order, s, self.regularity)
        esim = self.esim and dataclasses.replace(self.esim, k=k)
        return self.replace(order=order, esim=esim)

    def with_v0(self, v0: float) -> SimConfig:
        wavelet, source = self.wavelet, self.source
        if wavelet is not None:
            wavelet = dataclasses.replace(
                wavelet, epsilon=epsilon_for_peak_velocity(v0, wavelet.f_c, self.left))
        if source is not None:
            source = dataclasses.replace(source, epsilon=source_epsilon_for_velocity(v0, self.left))
        return self.replace(wavelet=wavelet, source=source, v0=v0)


def _section(data: dict, *path: str, required: bool = True) -> dict | None:
    node = data
    for key in path:
        if not isinstance(node, dict) or key not in node:
            if required:
                raise ConfigError(f"missing section [{'.'.join(path)}]")
            return None
        node = node[key]
    return node


def _get(sec: dict, key: str, name: str, default=None, cast=float):
    if key in sec:
        try:
            return cast(sec[key])
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{name}.{key}: {err}") from None
    if default is None:
        raise ConfigError(f"missing key {name}.{key}")
    return default


def config_from_dict(data: dict, overrides: dict | None = None) -> SimConfig:
    """Build a config; ``overrides`` may carry order, n, v0 and output_dir."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    try:
        left = MaterialParams(**_material(_section(data, "medium", "left"), "medium.left"))
        right_sec = _section(data, "medium", "right", required=False)
        right = MaterialParams(**_material(right_sec, "medium.right")) if right_sec else left

        fsec = _section(data, "fracture", required=False)
        fracture = None
        if fsec:
            fracture = FractureParams(
                alpha=_get(fsec, "alpha", "fracture"), K=_get(fsec, "K", "fracture"),
                d=_get(fsec, "d", "fracture"),
                sigma_bar=fsec.get("sigma_bar"), h_bar=fsec.get("h_bar"))

        run = _section(data, "run", required=False) or {}
        gsec = _section(data, "grid")
        n = int(overrides.get("n", _get(gsec, "n", "grid", cast=int)))
        grid = Grid.from_cfl(_get(gsec, "x_min", "grid"), _get(gsec, "x_max", "grid"), n,
                             _get(gsec, "cfl", "grid", 0.9), max(left.c, right.c))

        order = int(overrides.get("order", run.get("order", 4)))
        regularity = int(run.get("regularity", 6))
        k = int(run["k"]) if "k" in run and "order" not in overrides else select_k(order, order // 2, regularity)
        esim = EsimConfig(k, newton_tol=float(run.get("newton_tol", 1e-10)),
                          newton_max_iter=int(run.get("newton_max_iter", 50)),
                          damping=int(run.get("damping", 30)))

        v0 = overrides.get("v0")
        wavelet = None
        wsec = _section(data, "wavelet", required=False)
        if wsec:
            f_c, t0 = _get(wsec, "f_c", "wavelet"), _get(wsec, "t0", "wavelet")
            wv0 = v0 if v0 is not None else wsec.get("v0")
            if wv0 is not None:
                eps = epsilon_for_peak_velocity(float(wv0), f_c, left)
            else:
                eps = _get(wsec, "epsilon", "wavelet")
            wavelet = WaveletSpec(eps, f_c, t0)
            v0 = wv0 if wv0 is not None else v0

        source = None
        ssec = _section(data, "source", required=False)
        if ssec:
            sv0 = v0 if v0 is not None else ssec.get("v0")
            eps = (source_epsilon_for_velocity(float(sv0), left) if sv0 is not None
                   else _get(ssec, "epsilon", "source"))
            source = SourceSpec(_get(ssec, "x_s", "source"), eps,
                                2.0 * math.pi * _get(ssec, "f_c", "source"))
            v0 = sv0 if sv0 is not None else v0

        final_time = run.get("final_time")
        snaps = tuple(float(t) for t in run.get("snapshot_times", [final_time] if final_time else []))
        cfg = SimConfig(
            left=left, right=right, fracture=fracture, grid=grid, order=order, esim=esim,
            experiment=str(run.get("experiment", "ivp")), wavelet=wavelet, source=source,
            v0=None if v0 is None else float(v0),
            final_time=None if final_time is None else float(final_time),
            snapshot_times=snaps,
            stations=tuple(float(x) for x in run.get("stations", [])),
            output_dir=Path(overrides.get("output_dir", run.get("output_dir", "out"))),
            convergence_n=tuple(int(v) for v in run.get("convergence_n", (200, 400, 800, 1600))),
            harmonics=int(run.get("harmonics", 8)),
            settle_periods=int(run.get("settle_periods", 5)),
            record_periods=int(run.get("record_periods", 8)),
            dt_ode=None if run.get("dt_ode") is None else float(run["dt_ode"]),
            regularity=regularity,
        )
    except (TypeError, KeyError) as err:
        raise ConfigError(f"malformed configuration: {err}") from None
    return cfg.validate()


def _material(sec: dict, name: str) -> dict:
    return {"rho": _get(sec, "rho", name), "c": _get(sec, "c", name)}


def load_config(path: str | Path, overrides: dict | None = None) -> SimConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"invalid TOML in {path}: {err}") from None
    return config_from_dict(data, overrides)


def benchmark_config(experiment: str = "ivp", v0: float = 0.1, order: int = 4, n: int = 400) -> SimConfig:
    """The 400-m, alpha = 200.67 m configuration with equal media on both sides."""
    data = {
        "medium": {"left": {"rho": 1200.0, "c": 2800.0}, "right": {"rho": 1200.0, "c": 2800.0}},
        "fracture": {"alpha": 200.67, "K": 1.3e9, "d": 6.1e-4},
        "grid": {"x_min": 0.0, "x_max": 400.0, "n": n, "cfl": 0.9},
        "run": {"experiment": experiment, "order": order, "final_time": 0.11629,
                "stations": [220.0]},
    }
    if experiment == "harmonic":
        data["source"] = {"x_s": 40.0, "f_c": 50.0, "v0": v0}
        del data["run"]["final_time"]
    else:
        data["wavelet"] = {"f_c": 50.0, "t0": 0.052, "v0": v0}
    return config_from_dict(data)
