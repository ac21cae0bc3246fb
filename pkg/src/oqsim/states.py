"""Dense linear algebra for few-qubit quantum states.

States are plain numpy arrays: a pure state is a complex vector of unit
2-norm, a density matrix is a Hermitian, unit-trace, positive semidefinite
complex square matrix.  Qubit 0 is the most significant bit of the
computational-basis index, so ``tensor(a, b)`` places ``a`` on qubit 0.
All entropies are in bits (base-2 logarithms).
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
BELL_STATES = {
    "phi+": PHI_PLUS,
    "phi-": PHI_MINUS,
    "psi+": PSI_PLUS,
    "psi-": PSI_MINUS,
}


def num_qubits(dim: int) -> int:
    """Number of qubits for a Hilbert-space dimension, which must be 2**n."""
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    """Computational-basis ket |index> on ``n_qubits`` qubits."""
    vec = np.zeros(2**n_qubits, dtype=complex)
    vec[index] = 1.0
    return vec


def density(psi: np.ndarray) -> np.ndarray:
    """Outer product |psi><psi|."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def maximally_mixed(n_qubits: int) -> np.ndarray:
    dim = 2**n_qubits
    return np.eye(dim, dtype=complex) / dim


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product; the leftmost factor ends up on qubit 0 (MSB)."""
    if not factors:
        raise ValueError("tensor needs at least one factor")
    out = np.asarray(factors[0], dtype=complex)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite entries in tensor factor")
    for f in factors[1:]:
        f = np.asarray(f, dtype=complex)
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite entries in tensor factor")
        out = np.kron(out, f)
    return out


def pauli_string(labels: Sequence[str]) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. ('X', 'I', 'Z')."""
    return tensor(*(PAULIS[l] for l in labels))


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduce a multi-qubit density matrix to the qubits in ``keep``.

    Kept qubits stay in their original relative order regardless of the
    order they are listed in.
    """
    rho = np.asarray(rho, dtype=complex)
    n = num_qubits(rho.shape[0])
    keep = sorted(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    if len(set(keep)) != len(keep):
        raise ValueError("keep contains duplicate qubit indices")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"qubit index out of range for {n} qubits: {keep}")
    traced = [q for q in range(n) if q not in keep]
    arr = rho.reshape([2] * (2 * n))
    ncur = n
    for q in sorted(traced, reverse=True):
        arr = np.trace(arr, axis1=q, axis2=q + ncur)
        ncur -= 1
    dim = 2**ncur
    return arr.reshape(dim, dim)


def overlap(rho: np.ndarray, psi: np.ndarray) -> float:
    """<psi| rho |psi>, as a real number."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape[0] != psi.shape[0]:
        raise ValueError(f"dimension mismatch: {rho.shape[0]} vs {psi.shape[0]}")
    val = complex(psi.conj() @ rho @ psi)
    return float(val.real)


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.trace(rho @ rho).real)


def _clamped_eigvals(rho: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, clamped into [0, 1]."""
    vals = np.linalg.eigvalsh(rho)
    return np.clip(vals.real, 0.0, 1.0)


def vn_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in bits, with 0*log(0) = 0."""
    vals = _clamped_eigvals(rho)
    vals = vals[vals > 0]
    return float(-(vals * np.log2(vals)).sum())


def mutual_information(rho: np.ndarray, subsystem_a: Sequence[int] | None = None) -> float:
    """Quantum mutual information S(A) + S(B) - S(AB) in bits.

    ``subsystem_a`` lists the qubits of A; by default the first half of the
    register.  Values with magnitude below 1e-10 are clamped to 0.
    """
    rho = np.asarray(rho, dtype=complex)
    n = num_qubits(rho.shape[0])
    if subsystem_a is None:
        subsystem_a = list(range(n // 2))
    subsystem_a = sorted(subsystem_a)
    subsystem_b = [q for q in range(n) if q not in subsystem_a]
    if not subsystem_a or not subsystem_b:
        raise ValueError("bipartition must leave both sides nonempty")
    s_a = vn_entropy(partial_trace(rho, subsystem_a))
    s_b = vn_entropy(partial_trace(rho, subsystem_b))
    s_ab = vn_entropy(rho)
    val = s_a + s_b - s_ab
    if abs(val) < 1e-10:
        return 0.0
    return val


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) * sum of singular values of a - b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(0.5 * np.linalg.svd(a - b, compute_uv=False).sum())


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))**2 of two density matrices."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    vals, vecs = np.linalg.eigh(a)
    sq = vecs @ np.diag(np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T
    inner = sq @ b @ sq
    vals = np.linalg.eigvalsh(inner)
    return float(np.sqrt(np.clip(vals, 0, None)).sum() ** 2)


def hermiticity_defect(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.abs(m - m.conj().T).max())


def is_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-12,
    eig_tol: float = 1e-10,
) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if hermiticity_defect(rho) > herm_tol:
        return False
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        return False
    return float(np.linalg.eigvalsh(rho).min()) >= -eig_tol


def check_density_matrix(rho: np.ndarray, **tols) -> np.ndarray:
    """Validate a density matrix, raising ValueError with the failed property."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"not a square matrix: shape {rho.shape}")
    herm_tol = tols.get("herm_tol", 1e-12)
    trace_tol = tols.get("trace_tol", 1e-12)
    eig_tol = tols.get("eig_tol", 1e-10)
    if hermiticity_defect(rho) > herm_tol:
        raise ValueError(f"not Hermitian within {herm_tol}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr} differs from 1 beyond {trace_tol}")
    lo = float(np.linalg.eigvalsh(rho).min())
    if lo < -eig_tol:
        raise ValueError(f"minimum eigenvalue {lo} below -{eig_tol}")
    return rho


def check_pure_state(psi: np.ndarray, norm_tol: float = 1e-12) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("pure state must be a vector")
    if abs(np.linalg.norm(psi) - 1.0) > norm_tol:
        raise ValueError(f"state norm deviates from 1 beyond {norm_tol}")
    return psi
