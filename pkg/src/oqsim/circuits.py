"""Circuit IR, exact and noisy density-matrix execution, and sampling.

A circuit is an ordered list of gates over ``num_qubits`` named qubits,
optionally with a per-qubit preparation label from {"0", "1", "+"}.
Execution conjugates the density matrix gate by gate; the noisy variant
follows every gate with a depolarizing channel, so results are ensemble
averages with no trajectory sampling.  Measurement sampling is terminal,
in the computational basis, and fully determined by an explicit seed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .states import (
    KET_0,
    KET_1,
    KET_PLUS,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    density,
    num_qubits as _num_qubits,
    partial_trace,
    tensor,
)

SINGLE_QUBIT_KINDS = ("H", "X", "Y", "Z", "S", "Sdg", "RX", "RY", "RZ")
TWO_QUBIT_KINDS = ("CNOT", "CY", "CZ", "CRY")
ROTATION_KINDS = ("RX", "RY", "RZ", "CRY")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j]).astype(complex)
_FIXED_1Q = {
    "H": _H,
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "S": _S,
    "Sdg": _S.conj(),
}
_PREP_KETS = {"0": KET_0, "1": KET_1, "+": KET_PLUS}


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.diag([np.exp(-1j * angle / 2), np.exp(1j * angle / 2)])
    raise ValueError(f"unknown rotation kind {kind!r}")


def _controlled(u: np.ndarray) -> np.ndarray:
    """4x4 controlled gate, control on the first (most significant) qubit."""
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


@dataclass(frozen=True)
class Gate:
    """One gate application; ``qubits`` lists control first for controlled kinds."""

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind in SINGLE_QUBIT_KINDS:
            arity = 1
        elif self.kind in TWO_QUBIT_KINDS:
            arity = 2
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} takes {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.kind}{self.qubits}")
        if self.kind in ROTATION_KINDS:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} requires a finite angle")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def matrix(self) -> np.ndarray:
        if self.kind in _FIXED_1Q:
            return _FIXED_1Q[self.kind]
        if self.kind in ("RX", "RY", "RZ"):
            return rotation_matrix(self.kind, self.angle)
        if self.kind == "CNOT":
            return _controlled(PAULI_X)
        if self.kind == "CY":
            return _controlled(PAULI_Y)
        if self.kind == "CZ":
            return _controlled(PAULI_Z)
        if self.kind == "CRY":
            return _controlled(rotation_matrix("RY", self.angle))
        raise AssertionError(self.kind)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()
    prep: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        for g in self.gates:
            if max(g.qubits) >= self.num_qubits:
                raise ValueError(f"gate {g} addresses qubit beyond {self.num_qubits}")
        if self.prep is not None:
            prep = tuple(self.prep)
            if len(prep) != self.num_qubits:
                raise ValueError("prep must give one label per qubit")
            for label in prep:
                if label not in _PREP_KETS:
                    raise ValueError(f"unknown preparation label {label!r}")
            object.__setattr__(self, "prep", prep)

    def with_gates(self, extra: Iterable[Gate]) -> "Circuit":
        return Circuit(self.num_qubits, self.gates + tuple(extra), self.prep)

    def with_prep(self, prep: Sequence[str]) -> "Circuit":
        return Circuit(self.num_qubits, self.gates, tuple(prep))

    def initial_state(self) -> np.ndarray:
        """Density matrix implied by the preparation labels (|0...0> if unset)."""
        labels = self.prep or ("0",) * self.num_qubits
        return density(tensor(*(_PREP_KETS[l] for l in labels)))

    def to_json_dict(self) -> dict:
        out = {
            "num_qubits": self.num_qubits,
            "gates": [
                {"kind": g.kind, "qubits": list(g.qubits)}
                | ({"angle": g.angle} if g.angle is not None else {})
                for g in self.gates
            ],
        }
        if self.prep is not None:
            out["prep"] = list(self.prep)
        return out

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Circuit":
        gates = tuple(
            Gate(g["kind"], tuple(g["qubits"]), g.get("angle")) for g in data["gates"]
        )
        prep = tuple(data["prep"]) if "prep" in data else None
        return cls(int(data["num_qubits"]), gates, prep)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_json_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Gate application on density matrices / statevectors
# ---------------------------------------------------------------------------


def _apply_1q_vec(psi: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    psi = psi.reshape([2] * n)
    psi = np.tensordot(u, psi, axes=([1], [q]))
    return np.moveaxis(psi, 0, q).reshape(-1)


def _apply_2q_vec(psi: np.ndarray, u4: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    psi = psi.reshape([2] * n)
    ut = u4.reshape(2, 2, 2, 2)
    psi = np.tensordot(ut, psi, axes=([2, 3], [q0, q1]))
    return np.moveaxis(psi, [0, 1], [q0, q1]).reshape(-1)


def apply_gate_vec(psi: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    u = gate.matrix()
    if len(gate.qubits) == 1:
        return _apply_1q_vec(psi, u, gate.qubits[0], n)
    return _apply_2q_vec(psi, u, gate.qubits[0], gate.qubits[1], n)


def _apply_1q_dm(rho: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    dim = 2**n
    arr = rho.reshape([2] * (2 * n))
    arr = np.tensordot(u, arr, axes=([1], [q]))
    arr = np.moveaxis(arr, 0, q)
    arr = np.tensordot(arr, u.conj(), axes=([n + q], [1]))
    arr = np.moveaxis(arr, -1, n + q)
    return arr.reshape(dim, dim)


def _apply_2q_dm(rho: np.ndarray, u4: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    dim = 2**n
    ut = u4.reshape(2, 2, 2, 2)
    arr = rho.reshape([2] * (2 * n))
    arr = np.tensordot(ut, arr, axes=([2, 3], [q0, q1]))
    arr = np.moveaxis(arr, [0, 1], [q0, q1])
    arr = np.tensordot(arr, ut.conj(), axes=([n + q0, n + q1], [2, 3]))
    arr = np.moveaxis(arr, [-2, -1], [n + q0, n + q1])
    return arr.reshape(dim, dim)


def apply_gate_dm(rho: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    u = gate.matrix()
    if len(gate.qubits) == 1:
        return _apply_1q_dm(rho, u, gate.qubits[0], n)
    return _apply_2q_dm(rho, u, gate.qubits[0], gate.qubits[1], n)


def _depolarize(rho: np.ndarray, qubits: Sequence[int], p_mix: float, n: int) -> np.ndarray:
    """Mix ``rho`` with the state whose ``qubits`` are replaced by I/2**k.

    Uses the twirl identity: averaging over all Pauli conjugations of a
    subsystem equals replacing that subsystem with the maximally mixed state.
    """
    if p_mix == 0.0:
        return rho
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    reduced = partial_trace(rho, rest) if rest else np.array([[np.trace(rho)]])
    mixed_part = tensor(np.eye(2**k, dtype=complex) / 2**k, reduced)
    # mixed_part qubit order is (qubits..., rest...); permute back
    order = list(qubits) + rest
    perm = [order.index(q) for q in range(n)]
    arr = mixed_part.reshape([2] * (2 * n))
    arr = arr.transpose(perm + [n + p for p in perm])
    dim = 2**n
    return (1 - p_mix) * rho + p_mix * arr.reshape(dim, dim)


def run_exact(circuit: Circuit, initial: np.ndarray | None = None) -> np.ndarray:
    """Noiseless execution: rho -> U rho U^dagger for each gate in order."""
    n = circuit.num_qubits
    rho = circuit.initial_state() if initial is None else np.asarray(initial, dtype=complex)
    if rho.shape != (2**n, 2**n):
        raise ValueError(f"initial state dim {rho.shape} mismatches {n} qubits")
    for g in circuit.gates:
        rho = apply_gate_dm(rho, g, n)
    return rho


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate noise plus per-qubit readout confusion.

    ``eps1``/``eps2`` are the depolarizing probabilities appended after each
    single-/two-qubit gate (the two-qubit channel spreads ``eps2`` uniformly
    over the 15 non-identity two-qubit Paulis).  ``readout`` holds one
    column-stochastic 2x2 confusion matrix A, A[i][j] = P(read i | true j),
    applied independently to every measured qubit; pass a sequence of
    matrices for per-qubit confusion.
    """

    eps1: float = 0.0
    eps2: float = 0.0
    readout: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not 0.0 <= self.eps1 <= 1.0 or not 0.0 <= self.eps2 <= 1.0:
            raise ValueError("depolarizing probabilities must lie in [0, 1]")
        mats = np.asarray(self.readout, dtype=float)
        if mats.size == 0:
            mats = np.eye(2)[None]
        elif mats.ndim == 2:
            mats = mats[None]
        elif mats.ndim != 3:
            raise ValueError("readout must be one 2x2 matrix or a list of them")
        for a in mats:
            if a.shape != (2, 2) or (a < 0).any():
                raise ValueError("confusion matrix must be 2x2 with entries >= 0")
            if np.abs(a.sum(axis=0) - 1.0).max() > 1e-12:
                raise ValueError("confusion matrix columns must sum to 1")
        object.__setattr__(self, "readout", tuple(map(tuple, mats.reshape(-1, 4))))

    @classmethod
    def default(cls) -> "NoiseModel":
        # CNOT-class error ~10x the single-qubit one; 1% symmetric readout flip
        return cls(eps1=0.001, eps2=0.01, readout=[[0.99, 0.01], [0.01, 0.99]])

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(0.0, 0.0)

    def readout_matrix(self, qubit: int) -> np.ndarray:
        mats = self.readout_matrices(qubit + 1)
        return mats[qubit]

    def readout_matrices(self, n_qubits: int) -> list[np.ndarray]:
        mats = [np.array(m).reshape(2, 2) for m in self.readout]
        if len(mats) == 1:
            return mats * n_qubits
        if len(mats) < n_qubits:
            raise ValueError(f"noise model holds {len(mats)} readout matrices, need {n_qubits}")
        return mats[:n_qubits]

    def confusion_kron(self, qubits: Sequence[int]) -> np.ndarray:
        """Exact joint confusion matrix of the listed qubits (independence)."""
        mats = self.readout_matrices(max(qubits) + 1)
        out = np.array([[1.0]])
        for q in qubits:
            out = np.kron(out, mats[q])
        return out

    def to_json_dict(self) -> dict:
        mats = [list(map(list, np.array(m).reshape(2, 2))) for m in self.readout]
        readout = mats[0] if len(mats) == 1 else mats
        return {"eps1": self.eps1, "eps2": self.eps2, "readout": readout}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "NoiseModel":
        return cls(
            eps1=float(data.get("eps1", 0.0)),
            eps2=float(data.get("eps2", 0.0)),
            readout=data.get("readout", ()),
        )


def run_noisy(circuit: Circuit, initial: np.ndarray | None, noise: NoiseModel) -> np.ndarray:
    """Execute with a depolarizing channel appended after every gate."""
    n = circuit.num_qubits
    rho = circuit.initial_state() if initial is None else np.asarray(initial, dtype=complex)
    if rho.shape != (2**n, 2**n):
        raise ValueError(f"initial state dim {rho.shape} mismatches {n} qubits")
    for g in circuit.gates:
        rho = apply_gate_dm(rho, g, n)
        if len(g.qubits) == 1:
            rho = _depolarize(rho, g.qubits, noise.eps1, n)
        else:
            # (1-e) rho + e/15 * sum over non-identity two-qubit Paulis
            rho = _depolarize(rho, g.qubits, 16.0 * noise.eps2 / 15.0, n)
    return rho


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Counts:
    """Measured bitstring counts; qubit 0 is the leftmost character."""

    shots: int
    n_bits: int
    table: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "table", dict(sorted(self.table.items())))
        if sum(self.table.values()) != self.shots:
            raise ValueError("counts do not sum to the number of shots")

    def probabilities(self) -> np.ndarray:
        """Probability vector over all 2**n_bits outcomes, index = bitstring value."""
        out = np.zeros(2**self.n_bits)
        for bits, c in self.table.items():
            out[int(bits, 2)] = c / self.shots
        return out

    def marginal(self, positions: Sequence[int]) -> "Counts":
        """Counts over a subset of bit positions, in the order listed."""
        table: dict[str, int] = {}
        for bits, c in self.table.items():
            key = "".join(bits[p] for p in positions)
            table[key] = table.get(key, 0) + c
        return Counts(self.shots, len(positions), table)

    def expectation_parity(self, positions: Sequence[int] | None = None) -> float:
        """Mean of prod (-1)**bit over the listed positions (all, if None)."""
        if positions is None:
            positions = range(self.n_bits)
        total = 0
        for bits, c in self.table.items():
            sign = (-1) ** sum(int(bits[p]) for p in positions)
            total += sign * c
        return total / self.shots


def derive_seed(*parts: int) -> int:
    """Deterministic 64-bit stream seed from a tuple of integers."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


def sample_counts(
    rho: np.ndarray,
    shots: int,
    readout: Sequence[np.ndarray] | np.ndarray | None = None,
    seed: int = 0,
) -> Counts:
    """Draw ``shots`` computational-basis outcomes from diag(rho).

    With ``readout`` given (one confusion matrix, or one per qubit), each true
    bit is flipped independently per its matrix.  Identical arguments always
    produce identical counts.
    """
    if shots < 1:
        raise ValueError("shots must be a positive integer")
    rho = np.asarray(rho, dtype=complex)
    n = _num_qubits(rho.shape[0])
    probs = np.clip(np.diag(rho).real, 0.0, None)
    total = probs.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"state probabilities sum to {total}, not 1")
    probs = probs / total
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(2**n, size=shots, p=probs)
    bits = (outcomes[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    if readout is not None:
        mats = np.asarray(readout, dtype=float)
        if mats.ndim == 2:
            mats = np.repeat(mats[None], n, axis=0)
        if mats.shape != (n, 2, 2):
            raise ValueError(f"need {n} confusion matrices, got shape {mats.shape}")
        for q in range(n):
            p_read_1 = mats[q][1, bits[:, q]]
            bits[:, q] = rng.random(shots) < p_read_1
    table: dict[str, int] = {}
    keys = np.array(["".join(map(str, row)) for row in bits])
    uniq, cnt = np.unique(keys, return_counts=True)
    for k, c in zip(uniq, cnt):
        table[str(k)] = int(c)
    return Counts(shots, n, table)


def counts_to_csv(counts: Counts) -> str:
    lines = ["bitstring,count"]
    lines += [f"{bits},{c}" for bits, c in counts.table.items()]
    return "\n".join(lines) + "\n"


def counts_from_csv(text: str, shots: int | None = None) -> Counts:
    rows = [r for r in text.strip().splitlines()[1:] if r]
    table = {bits: int(c) for bits, c in (r.split(",") for r in rows)}
    n_bits = len(next(iter(table)))
    total = sum(table.values())
    return Counts(shots if shots is not None else total, n_bits, table)


# ---------------------------------------------------------------------------
# Channel extraction
# ---------------------------------------------------------------------------


def circuit_to_channel(
    circuit: Circuit,
    system_qubits: Sequence[int],
    ancilla_prep: np.ndarray | None = None,
) -> np.ndarray:
    """Choi matrix of the map the circuit induces on ``system_qubits``.

    A maximally entangled reference state is propagated on system + copy
    while the remaining circuit qubits start in ``ancilla_prep`` (default
    |0...0>), then the ancillae are traced out.  The Choi matrix is indexed
    input-register first and normalized to trace = dim(system).  Preparation
    labels of system qubits are ignored; ancilla labels are honored unless
    ``ancilla_prep`` overrides them.
    """
    n = circuit.num_qubits
    system_qubits = sorted(system_qubits)
    if len(set(system_qubits)) != len(system_qubits):
        raise ValueError("system_qubits contains duplicates")
    if any(q < 0 or q >= n for q in system_qubits):
        raise ValueError("system qubit index out of range")
    ancillae = [q for q in range(n) if q not in system_qubits]
    n_sys = len(system_qubits)
    n_anc = len(ancillae)
    if ancilla_prep is None:
        if circuit.prep is not None:
            anc = np.array([1.0 + 0j])
            for q in ancillae:
                anc = np.kron(anc, _PREP_KETS[circuit.prep[q]])
        else:
            anc = np.zeros(2**n_anc, dtype=complex)
            anc[0] = 1.0
    else:
        anc = np.asarray(ancilla_prep, dtype=complex)
        if anc.shape != (2**n_anc,):
            raise ValueError(f"ancilla_prep must have dimension {2**n_anc}")

    n_tot = n_sys + n
    psi = np.zeros(2**n_tot, dtype=complex)
    for i in range(2**n_sys):
        sys_bits = [(i >> (n_sys - 1 - k)) & 1 for k in range(n_sys)]
        for a in range(2**n_anc):
            if anc[a] == 0:
                continue
            anc_bits = [(a >> (n_anc - 1 - k)) & 1 for k in range(n_anc)]
            idx = 0
            for k in range(n_sys):  # copy register
                idx = (idx << 1) | sys_bits[k]
            circ_bits = [0] * n
            for k, q in enumerate(system_qubits):
                circ_bits[q] = sys_bits[k]
            for k, q in enumerate(ancillae):
                circ_bits[q] = anc_bits[k]
            for b in circ_bits:
                idx = (idx << 1) | b
            psi[idx] = anc[a]

    for g in circuit.gates:
        shifted = Gate(g.kind, tuple(q + n_sys for q in g.qubits), g.angle)
        psi = apply_gate_vec(psi, shifted, n_tot)

    rho = np.outer(psi, psi.conj())
    keep = list(range(n_sys)) + [n_sys + q for q in system_qubits]
    return partial_trace(rho, keep)
