"""Builders turning physical channel parameters into executable circuits.

Every builder here induces, on its system qubit(s), exactly the analytic
channel from :mod:`oqsim.channels` with the matching parameters; the test
suite pins this down via Choi-matrix comparison of
:func:`oqsim.circuits.circuit_to_channel` output.  Preparation of system
input states goes through circuit preparation labels (ignored during channel
extraction), while ancilla preparation is done with explicit gates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ADParams, c1
from .circuits import Circuit, Gate


class SolverError(ArithmeticError):
    """The Pauli-angle solver found no angle triple passing the forward check."""


def pump_rotation_angle(p: float) -> float:
    """Controlled-rotation angle realizing pump probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"pump strength p={p} outside [0, 1]")
    return 2.0 * math.asin(math.sqrt(p))


def _pump_zz_gates(p: float) -> list[Gate]:
    # s1=0, s2=1, ancilla a_zz=2 prepared |1>; parity of Z(x)Z mapped to s2,
    # copied into the ancilla, rotated conditionally, then unmapped.
    theta = pump_rotation_angle(p)
    return [
        Gate("X", (2,)),
        Gate("CNOT", (0, 1)),
        Gate("CNOT", (1, 2)),
        Gate("CRY", (2, 1), theta),
        Gate("CNOT", (1, 2)),
        Gate("CNOT", (0, 1)),
    ]


def _pump_xx_gates(p: float) -> list[Gate]:
    # X(x)X parity ends up on s1 after the CNOT; the Hadamard moves it to the
    # computational basis before copying into ancilla a_xx=3.  The CZ pair is
    # load-bearing: without it the pumped branch flips the parity with
    # sigma_z on s1 rather than on s2, which differs on cross-sector
    # coherences (invisible to Bell populations, not to the Choi matrix).
    theta = pump_rotation_angle(p)
    return [
        Gate("X", (3,)),
        Gate("CNOT", (0, 1)),
        Gate("H", (0,)),
        Gate("CZ", (0, 1)),
        Gate("CNOT", (0, 3)),
        Gate("CRY", (3, 0), theta),
        Gate("CNOT", (0, 3)),
        Gate("CZ", (0, 1)),
        Gate("H", (0,)),
        Gate("CNOT", (0, 1)),
    ]


def build_pump_zz_circuit(p: float) -> Circuit:
    """Four-qubit circuit pumping the Z(x)Z +1 eigenspace of (s1, s2)."""
    return Circuit(4, tuple(_pump_zz_gates(p)))


def build_pump_xx_circuit(p: float) -> Circuit:
    """Four-qubit circuit pumping the X(x)X +1 eigenspace of (s1, s2)."""
    return Circuit(4, tuple(_pump_xx_gates(p)))


def build_composed_pump_circuit(p: float) -> Circuit:
    """ZZ pump followed by the XX pump, with the touching CNOT pair elided."""
    zz = _pump_zz_gates(p)
    xx = _pump_xx_gates(p)
    assert zz[-1] == xx[1]  # the cancelling CNOT(s1, s2) pair
    gates = zz[:-1] + [xx[0]] + xx[2:]
    return Circuit(4, tuple(gates))


def _collision_gates(system: int, ancilla: int, g_tau: float) -> list[Gate]:
    # exp(-i g_tau Z(x)Z) on (system, ancilla): Z rotation between two CNOTs
    return [
        Gate("CNOT", (system, ancilla)),
        Gate("RZ", (ancilla,), 2.0 * g_tau),
        Gate("CNOT", (system, ancilla)),
    ]


def build_collisional_circuit(
    n: int,
    g_tau: float,
    correlated: bool,
    with_measurement_rotation: bool = True,
) -> Circuit:
    """Collision sequence dephasing the system qubit (qubit 0).

    The separable variant allocates one |+> ancilla per collision; the
    correlated variant prepares three ancillae in a GHZ state and collides
    alternately with the first two of them.  The system is prepared in |+>
    and, unless ``with_measurement_rotation`` is false, a final Hadamard maps
    <X> onto the terminal Z-basis counts.
    """
    if n < 1:
        raise ValueError("need at least one collision")
    gates: list[Gate] = []
    if correlated:
        n_qubits = 4
        gates += [Gate("H", (1,)), Gate("CNOT", (1, 2)), Gate("CNOT", (1, 3))]
        for k in range(n):
            gates += _collision_gates(0, 1 + (k % 2), g_tau)
    else:
        n_qubits = n + 1
        gates += [Gate("H", (q,)) for q in range(1, n + 1)]
        for k in range(n):
            gates += _collision_gates(0, k + 1, g_tau)
    if with_measurement_rotation:
        gates.append(Gate("H", (0,)))
    prep = ("+",) + ("0",) * (n_qubits - 1)
    return Circuit(n_qubits, tuple(gates), prep)


def damping_rotation_angle(t: float, params: ADParams) -> float:
    """Conditional-rotation half-angle arccos(c1(t))."""
    return math.acos(c1(t, params))


def build_amplitude_damping_circuit(
    t: float,
    params: ADParams,
    with_witness: bool = False,
    witness_basis: str = "ZZ",
) -> Circuit:
    """Damping of the system qubit (0) into an environment qubit (1).

    Without the witness the system is prepared excited and its terminal
    counts give the surviving population.  With it, a third qubit is
    entangled with the system before the damping acts, and basis-change
    gates are appended so Z-basis counts of (witness, system) yield the
    requested correlator: XX uses Hadamards, YY uses Sdg then H, ZZ none.
    """
    theta = damping_rotation_angle(t, params)
    damping = [Gate("CRY", (0, 1), 2.0 * theta), Gate("CNOT", (1, 0))]
    if not with_witness:
        return Circuit(2, tuple(damping), prep=("1", "0"))
    if witness_basis not in ("XX", "YY", "ZZ"):
        raise ValueError(f"unknown witness basis {witness_basis!r}")
    gates = [Gate("H", (2,)), Gate("CNOT", (2, 0))] + damping
    for q in (2, 0):
        if witness_basis == "XX":
            gates.append(Gate("H", (q,)))
        elif witness_basis == "YY":
            gates += [Gate("Sdg", (q,)), Gate("H", (q,))]
    return Circuit(3, tuple(gates), prep=("0", "0", "0"))


def depolarizing_rotation_angle(p: float) -> float:
    """Ancilla preparation angle theta(p) = arccos(1 - 2p) / 2."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing strength p={p} outside [0, 1]")
    return 0.5 * math.acos(1.0 - 2.0 * p)


def depolarizing_strength(theta: float) -> float:
    """Inverse of the preparation-angle relation: p = sin(theta)**2."""
    return math.sin(theta) ** 2


def build_depolarizing_circuit(p: float) -> Circuit:
    """Three ancillae, each firing one of X, Y, Z on the system qubit (0).

    Every ancilla is rotated so a controlled Pauli is applied with
    probability sin(theta/2)**2, which makes each error weight p/4 after
    accounting for overlapping firings.
    """
    theta = depolarizing_rotation_angle(p)
    gates = [
        Gate("RY", (1,), theta),
        Gate("RY", (2,), theta),
        Gate("RY", (3,), theta),
        Gate("CNOT", (1, 0)),
        Gate("CY", (2, 0)),
        Gate("CZ", (3, 0)),
    ]
    return Circuit(4, tuple(gates))


# ---------------------------------------------------------------------------
# General Pauli channel: two entangled control ancillae
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PauliAngles:
    """Rotation angles preparing the two-ancilla control state."""

    theta1: float
    theta2: float
    theta3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.theta3])


def ancilla_amplitudes(angles: PauliAngles | np.ndarray) -> np.ndarray:
    """Amplitudes (|00>, |01>, |10>, |11>) of the two-ancilla control state.

    The state is produced by RY(2 theta1) on the first ancilla, a CNOT onto
    the second, then RY(2 theta2) and RY(2 theta3) on the pair.
    """
    th = angles.as_array() if isinstance(angles, PauliAngles) else np.asarray(angles)
    c1_, c2, c3 = np.cos(th)
    s1, s2, s3 = np.sin(th)
    return np.array(
        [
            c1_ * c2 * c3 + s1 * s2 * s3,
            c1_ * c2 * s3 - s1 * s2 * c3,
            c1_ * s2 * c3 - s1 * c2 * s3,
            s1 * c2 * c3 + c1_ * s2 * s3,
        ]
    )

# Control pattern |a1 a2>: a1 fires the controlled-X, a2 the controlled-Y and
# both together amount to Z.  Probability slots in channel order (I, X, Y, Z)
# therefore read the amplitude vector at positions (00, 10, 01, 11).
_CHANNEL_SLOT = (0, 2, 1, 3)


def pauli_probabilities_from_angles(angles: PauliAngles | np.ndarray) -> tuple:
    """Pauli weights (p0, p1, p2, p3) induced by the control state."""
    amps = ancilla_amplitudes(angles) ** 2
    return tuple(float(amps[i]) for i in _CHANNEL_SLOT)


def _forward_residual(angles: np.ndarray, probs: np.ndarray) -> float:
    got = np.array(pauli_probabilities_from_angles(angles))
    return float(np.abs(got - probs).max())


def _halton_starts(count: int, hi: float) -> np.ndarray:
    """Deterministic low-discrepancy start grid over [0, hi]^3."""

    def van_der_corput(i: int, base: int) -> float:
        x, denom = 0.0, 1.0
        while i:
            i, rem = divmod(i, base)
            denom *= base
            x += rem / denom
        return x

    pts = np.array(
        [[van_der_corput(i, b) for b in (2, 3, 5)] for i in range(1, count + 1)]
    )
    return pts * hi


_STARTS = _halton_starts(25, math.pi / 2)


def _newton_solve(target: np.ndarray, start: np.ndarray) -> np.ndarray | None:
    """Damped Newton on the (|01>, |10>, |11>) amplitude equations."""
    th = start.astype(float).copy()

    def residual(th):
        return ancilla_amplitudes(th)[1:] - target

    def jacobian(th):
        # analytic partials of the (B, C, D) amplitudes wrt each angle
        c = np.cos(th)
        s = np.sin(th)
        d1 = np.array(
            [
                -s[0] * c[1] * s[2] - c[0] * s[1] * c[2],
                -s[0] * s[1] * c[2] - c[0] * c[1] * s[2],
                c[0] * c[1] * c[2] - s[0] * s[1] * s[2],
            ]
        )
        d2 = np.array(
            [
                -c[0] * s[1] * s[2] - s[0] * c[1] * c[2],
                c[0] * c[1] * c[2] + s[0] * s[1] * s[2],
                -s[0] * s[1] * c[2] + c[0] * c[1] * s[2],
            ]
        )
        d3 = np.array(
            [
                c[0] * c[1] * c[2] + s[0] * s[1] * s[2],
                -c[0] * s[1] * s[2] - s[0] * c[1] * c[2],
                -s[0] * c[1] * s[2] + c[0] * s[1] * c[2],
            ]
        )
        return np.column_stack([d1, d2, d3])

    f = residual(th)
    for _ in range(60):
        if np.abs(f).max() < 1e-13:
            return th
        jac = jacobian(th)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        scale = 1.0
        base = np.dot(f, f)
        for _ in range(40):
            cand = th + scale * step
            fc = residual(cand)
            if np.dot(fc, fc) < base:
                th, f = cand, fc
                break
            scale /= 2
        else:
            return None
    return th if np.abs(f).max() < 1e-13 else None


def solve_pauli_angles(p0: float, p1: float, p2: float, p3: float) -> PauliAngles:
    """Angles whose control state induces the requested Pauli weights.

    Takes square roots of the targets with a sign search over the eight
    patterns of the (|01>, |10>, |11>) amplitudes, runs damped Newton from a
    fixed 25-point start grid, and returns the first sign pattern's passing
    solution of smallest norm.  The forward check (weights reproduced within
    1e-9) gates every return.
    """
    probs = np.array([p0, p1, p2, p3], dtype=float)
    if probs.min() < -1e-12 or abs(probs.sum() - 1.0) > 1e-10:
        raise ValueError(f"invalid probability vector {probs.tolist()}")
    probs = np.clip(probs, 0.0, None)
    amp_targets = np.sqrt(probs[list(_CHANNEL_SLOT)])  # state order 00,01,10,11
    best_residual = math.inf
    for signs in ((1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
                  (-1, 1, 1), (-1, 1, -1), (-1, -1, 1), (-1, -1, -1)):
        target = amp_targets[1:] * np.array(signs)
        passing = []
        for start in _STARTS:
            th = _newton_solve(target, start)
            if th is None:
                continue
            res = _forward_residual(th, probs)
            best_residual = min(best_residual, res)
            if res <= 1e-9:
                passing.append(th)
        if passing:
            th = min(passing, key=lambda a: float(np.linalg.norm(a)))
            return PauliAngles(*np.asarray(th, dtype=float))
    raise SolverError(
        f"no angle triple reproduces {probs.tolist()} (best residual {best_residual})"
    )


def build_pauli_circuit(angles: PauliAngles) -> Circuit:
    """System qubit (0) plus two entangled ancillae firing X and Y."""
    gates = [
        Gate("RY", (1,), 2.0 * angles.theta1),
        Gate("CNOT", (1, 2)),
        Gate("RY", (1,), 2.0 * angles.theta2),
        Gate("RY", (2,), 2.0 * angles.theta3),
        Gate("CNOT", (1, 0)),
        Gate("CY", (2, 0)),
    ]
    return Circuit(3, tuple(gates))
