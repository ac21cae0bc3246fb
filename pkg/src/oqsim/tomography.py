"""Readout calibration, constrained mitigation, and state tomography.

Mitigation solves a simplex-constrained least-squares problem instead of
inverting the confusion matrix, so its output is always a probability
vector.  Tomography reconstructs by Pauli-basis linear inversion followed by
the eigenvalue-redistribution projection onto the unit-trace PSD cone, which
is the closest such matrix in Frobenius norm.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .circuits import Counts, Gate, NoiseModel, derive_seed, sample_counts
from .states import basis_state, density, pauli_string

BASIS_LETTERS = ("X", "Y", "Z")


def basis_rotation_gates(basis: str, qubit: int) -> list[Gate]:
    """Gates mapping the given measurement basis onto the Z axis."""
    if basis == "Z":
        return []
    if basis == "X":
        return [Gate("H", (qubit,))]
    if basis == "Y":
        return [Gate("Sdg", (qubit,)), Gate("H", (qubit,))]
    raise ValueError(f"unknown measurement basis {basis!r}")


def measure_calibration(
    noise: NoiseModel,
    n_qubits: int,
    shots: int,
    seed: int,
    qubits: Sequence[int] | None = None,
) -> np.ndarray:
    """Empirical confusion matrix from preparing every basis state.

    Column j holds the observed outcome distribution when basis state j is
    prepared ideally and read out through the noise model's confusion.
    ``qubits`` selects which register qubits the measured bits belong to
    (defaults to 0..n_qubits-1); it only matters for per-qubit confusions.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if qubits is None:
        qubits = list(range(n_qubits))
    if len(qubits) != n_qubits:
        raise ValueError("qubits must list one register index per measured bit")
    dim = 2**n_qubits
    mats = noise.readout_matrices(max(qubits) + 1)
    readout = [mats[q] for q in qubits]
    cal = np.zeros((dim, dim))
    for j in range(dim):
        rho = density(basis_state(n_qubits, j))
        counts = sample_counts(rho, shots, readout=readout, seed=derive_seed(seed, j))
        cal[:, j] = counts.probabilities()
    return cal


def exact_calibration(noise: NoiseModel, qubits: Sequence[int] | int) -> np.ndarray:
    """Infinite-shot calibration: Kronecker product of per-qubit confusions."""
    if isinstance(qubits, int):
        qubits = list(range(qubits))
    return noise.confusion_kron(list(qubits))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(v) + 1)
    cond = u + (1.0 - css) / ks > 0
    k = ks[cond][-1]
    tau = (1.0 - css[k - 1]) / k
    return np.clip(v + tau, 0.0, None)


@dataclass(frozen=True)
class MitigationResult:
    probabilities: np.ndarray
    converged: bool
    residual: float
    iterations: int


def mitigate_counts(counts: Counts | np.ndarray, cal: np.ndarray) -> MitigationResult:
    """Readout-corrected outcome distribution.

    Solves min ||A x - y||_2 over the probability simplex by projected
    gradient descent with fixed step 1 / ||A||_2**2, stopping when the
    iterate moves less than 1e-12 or after 1e5 iterations (flagged as
    non-converged, best iterate returned).
    """
    cal = np.asarray(cal, dtype=float)
    y = counts.probabilities() if isinstance(counts, Counts) else np.asarray(counts, float)
    if cal.shape != (len(y), len(y)):
        raise ValueError(f"calibration shape {cal.shape} mismatches {len(y)} outcomes")
    step = 1.0 / np.linalg.norm(cal, 2) ** 2
    ata = cal.T @ cal
    aty = cal.T @ y
    x = project_simplex(y)
    converged = False
    max_iter = 100_000
    it = 0
    for it in range(1, max_iter + 1):
        x_new = project_simplex(x - step * (ata @ x - aty))
        delta = np.abs(x_new - x).max()
        x = x_new
        if delta < 1e-12:
            converged = True
            break
    residual = float(np.linalg.norm(cal @ x - y))
    return MitigationResult(x, converged, residual, it)


@dataclass(frozen=True)
class TomographyRecord:
    """Counts taken after rotating each qubit into the given basis."""

    basis: tuple[str, ...]
    counts: Counts

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        for b in self.basis:
            if b not in BASIS_LETTERS:
                raise ValueError(f"unknown basis letter {b!r}")
        if self.counts.n_bits != len(self.basis):
            raise ValueError("record counts cover a different number of qubits")


def project_psd_unit_trace(mat: np.ndarray) -> np.ndarray:
    """Closest (Frobenius) PSD unit-trace matrix to a Hermitian unit-trace one.

    Walks the eigenvalues in ascending order, zeroing each negative one and
    spreading its mass uniformly over all remaining eigenvalues.
    """
    mat = np.asarray(mat, dtype=complex)
    vals, vecs = np.linalg.eigh(mat)
    out = vals.real.copy()
    for i in range(len(out)):
        if out[i] >= 0:
            break
        remaining = len(out) - i - 1
        out[i + 1 :] += out[i] / remaining
        out[i] = 0.0
    return (vecs * out) @ vecs.conj().T


def _setting_expectations(prob_by_setting: Mapping[tuple, np.ndarray], n: int) -> dict:
    """Expectation of every n-qubit Pauli string from the 3**n settings."""
    expectations: dict[tuple, float] = {("I",) * n: 1.0}
    signs_cache: dict[tuple, np.ndarray] = {}
    for string in itertools.product("IXYZ", repeat=n):
        if all(s == "I" for s in string):
            continue
        setting = tuple("Z" if s == "I" else s for s in string)
        probs = prob_by_setting[setting]
        active = tuple(q for q, s in enumerate(string) if s != "I")
        if active not in signs_cache:
            idx = np.arange(2**n)
            signs = np.ones(2**n)
            for q in active:
                signs *= 1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1)
            signs_cache[active] = signs
        expectations[string] = float(signs_cache[active] @ probs)
    return expectations


def tomography(
    records: Sequence[TomographyRecord],
    mitigated: bool = False,
    cal: np.ndarray | None = None,
) -> np.ndarray:
    """Maximum-likelihood density matrix from a complete set of basis settings.

    Requires all 3**n settings exactly once.  Counts are optionally
    readout-mitigated, Pauli expectations are assembled by linear inversion,
    and the result is projected onto the PSD unit-trace cone.
    """
    if not records:
        raise ValueError("no tomography records given")
    n = len(records[0].basis)
    needed = set(itertools.product(BASIS_LETTERS, repeat=n))
    seen = [r.basis for r in records]
    if len(set(seen)) != len(seen):
        raise ValueError("duplicate basis settings")
    if set(seen) != needed:
        missing = sorted(needed - set(seen))
        raise ValueError(f"incomplete basis settings, missing {missing[:5]}...")
    if mitigated and cal is None:
        raise ValueError("mitigated tomography needs a calibration matrix")

    prob_by_setting = {}
    for rec in records:
        if mitigated:
            prob_by_setting[rec.basis] = mitigate_counts(rec.counts, cal).probabilities
        else:
            prob_by_setting[rec.basis] = rec.counts.probabilities()
    return reconstruct_from_probabilities(prob_by_setting)


def reconstruct_from_probabilities(prob_by_setting: Mapping[tuple, np.ndarray]) -> np.ndarray:
    """Reconstruction from per-setting outcome distributions.

    With exact (infinite-shot) distributions of a valid state the linear
    inversion is already exact and the projection leaves it untouched.
    """
    n = len(next(iter(prob_by_setting)))
    expectations = _setting_expectations(prob_by_setting, n)
    dim = 2**n
    rho_lin = np.zeros((dim, dim), dtype=complex)
    for string, value in expectations.items():
        rho_lin += value * pauli_string(string)
    rho_lin /= dim
    return project_psd_unit_trace(rho_lin)


def calibration_to_csv(cal: np.ndarray) -> str:
    lines = [",".join(f"{x:.15g}" for x in row) for row in np.asarray(cal, float)]
    return "\n".join(lines) + "\n"


def calibration_from_csv(text: str) -> np.ndarray:
    rows = [r for r in text.strip().splitlines() if r]
    return np.array([[float(x) for x in r.split(",")] for r in rows])
