from __future__ import annotations

import pytest

from fracwave.esim import EsimConfig
from fracwave.fracture import build_jump_operators
from fracwave.model import FractureParams, MaterialParams, WaveletSpec, epsilon_for_peak_velocity

ROCK = MaterialParams(1200.0, 2800.0)
BB = FractureParams(alpha=200.67, K=1.3e9, d=6.1e-4)
T_SNAP = 0.11629

# criterion number -> list of (label, ok, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture(scope="session")
def rock():
    return ROCK


@pytest.fixture(scope="session")
def bb():
    return BB


@pytest.fixture(scope="session")
def ops5():
    """D_0..D_5 for the reference fracture (what k = 3 needs)."""
    return build_jump_operators(BB, ROCK, ROCK, 5)


def wavelet(v0: float) -> WaveletSpec:
    return WaveletSpec(epsilon_for_peak_velocity(v0, 50.0, ROCK), 50.0, 0.052)


def esim(k: int = 3) -> EsimConfig:
    return EsimConfig(k)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[num]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{label}: {'ok' if good else 'MISS'} ({info})"
                           for label, good, info in parts)
        tr.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
