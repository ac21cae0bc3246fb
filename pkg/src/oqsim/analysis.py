"""Derived physical quantities: non-Markovianity witness, channel capacity,
extractable work, and revival detection on time series."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import KrausChannel, choi
from .states import (
    PHI_PLUS,
    mutual_information,
    partial_trace,
    pauli_string,
    vn_entropy,
)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def witness_f(channel: KrausChannel | np.ndarray) -> float:
    """Entanglement-survival witness of a single-qubit channel.

    Overlap of (I (x) Phi) applied to |phi+><phi+| with |phi+| itself,
    evaluated directly and cross-checked against the local-observable form
    (1 + <XX> - <YY> + <ZZ>) / 4.
    """
    if isinstance(channel, KrausChannel):
        if channel.dim != 2:
            raise ValueError("witness is defined for single-qubit channels")
        c = choi(channel)
    else:
        c = np.asarray(channel, dtype=complex)
        if c.shape != (4, 4):
            raise ValueError("witness is defined for single-qubit channels")
    state = c / 2.0  # (I (x) Phi)[|phi+><phi+|]
    direct = float((PHI_PLUS.conj() @ state @ PHI_PLUS).real)
    local = 0.25 * (
        1.0
        + float(np.trace(state @ pauli_string("XX")).real)
        - float(np.trace(state @ pauli_string("YY")).real)
        + float(np.trace(state @ pauli_string("ZZ")).real)
    )
    assert abs(direct - local) < 1e-10, "witness evaluations disagree"
    return direct


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits, 0 at both endpoints."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x))


def _golden_max(f, lo: float, hi: float, xtol: float) -> tuple:
    """Golden-section maximizer of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > xtol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    x = (a + b) / 2
    return x, f(x)


def channel_capacity_ad(eta: float) -> float:
    """Quantum capacity of amplitude damping with survival probability eta.

    Zero for eta <= 1/2; otherwise the maximum over the input excitation
    probability p of H2(eta p) - H2((1 - eta) p), located by golden-section
    search to 1e-10 in p.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"survival probability {eta} outside [0, 1]")
    if eta <= 0.5:
        return 0.0

    def objective(p: float) -> float:
        return binary_entropy(eta * p) - binary_entropy((1.0 - eta) * p)

    _, val = _golden_max(objective, 0.0, 1.0, 1e-10)
    return min(1.0, max(0.0, val))


def extractable_work(rho_sm: np.ndarray, kT: float = 1.0) -> float:
    """Work extractable from erasing a qubit next to a quantum memory.

    ``rho_sm`` is the joint state with the system on qubit 0 and the memory
    on qubit 1; returns [1 - S(system) + I(system:memory)] * kT * ln 2.
    """
    rho_sm = np.asarray(rho_sm, dtype=complex)
    if rho_sm.shape != (4, 4):
        raise ValueError("expected a two-qubit system+memory state")
    s_sys = vn_entropy(partial_trace(rho_sm, [0]))
    info = mutual_information(rho_sm, [0])
    return (1.0 - s_sys + info) * kT * LN2


def revival_tolerance(shots: int) -> float:
    """Revival threshold for probability-valued series estimated from counts.

    Three times the worst-case binomial standard error; use the default
    1e-6 tolerance for analytic series instead.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return 3.0 * math.sqrt(0.25 / shots)


def detect_revivals(
    series: TimeSeries | Sequence[float], tol: float = 1e-6
) -> list[tuple[int, float]]:
    """Indices where the series rises by more than ``tol`` after a decrease.

    Returns (index, rise magnitude) pairs, the index naming the local trough;
    an empty list means the series is monotone within the tolerance.
    """
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, float)
    if len(values) < 3:
        raise ValueError("need at least three points to detect revivals")
    revivals = []
    seen_decrease = False
    for i in range(len(values) - 1):
        if values[i + 1] < values[i] - tol:
            seen_decrease = True
        elif seen_decrease and values[i + 1] > values[i] + tol:
            revivals.append((i, float(values[i + 1] - values[i])))
    return revivals


def write_series_csv(path, series: Sequence[TimeSeries]) -> None:
    """Write series as ``t,value,label`` rows at 15 significant digits."""
    lines = ["t,value,label"]
    for s in series:
        for t, v in zip(s.times, s.values):
            lines.append(f"{t:.15g},{v:.15g},{s.label}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_series_csv(path) -> list[TimeSeries]:
    with open(path, encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if rows[0] != "t,value,label":
        raise ValueError(f"unexpected series header {rows[0]!r}")
    grouped: dict[str, list[tuple[float, float]]] = {}
    for row in rows[1:]:
        t, v, label = row.split(",", 2)
        grouped.setdefault(label, []).append((float(t), float(v)))
    return [
        TimeSeries(np.array([t for t, _ in pts]), np.array([v for _, v in pts]), label)
        for label, pts in grouped.items()
    ]
