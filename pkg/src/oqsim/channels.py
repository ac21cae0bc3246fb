"""Analytic CPTP channels, a time-local master-equation integrator, and
divisibility diagnostics.

Channels are held in operator-sum (Kraus) form; the Choi matrix (indexed
input-register first, trace normalized to the system dimension) is the
canonical form used for comparisons and complete-positivity tests.
Superoperators use the column-stacking convention, vec(A B C) =
(C^T kron A) vec(B).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .states import (
    I2,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    num_qubits as _num_qubits,
    partial_trace,
    tensor,
    trace_distance,
)


class SingularityError(ArithmeticError):
    """A rate or an inverse map is evaluated at a singular point."""


class IntegrationError(ArithmeticError):
    """The master-equation integrator lost accuracy or produced NaNs."""


class CompletePositivityError(ValueError):
    """A rate family produced Pauli weights that are not a probability vector."""


@dataclass(frozen=True)
class KrausChannel:
    """CPTP map as a list of same-shaped Kraus operators."""

    operators: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise ValueError("Kraus operators must be equal-sized square matrices")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def completeness_defect(self) -> float:
        """Max elementwise deviation of sum K^dag K from the identity."""
        acc = sum(k.conj().T @ k for k in self.operators)
        return float(np.abs(acc - np.eye(self.dim)).max())

    def check(self, tol: float = 1e-10) -> "KrausChannel":
        defect = self.completeness_defect()
        if defect > tol:
            raise ValueError(f"Kraus completeness violated by {defect}")
        return self

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ k.conj().T for k in self.operators)

    def compose(self, inner: "KrausChannel") -> "KrausChannel":
        """self after inner: (self . inner)(rho) = self(inner(rho))."""
        ops = tuple(a @ b for a in self.operators for b in inner.operators)
        return KrausChannel(ops)

    @classmethod
    def identity(cls, dim: int = 2) -> "KrausChannel":
        return cls((np.eye(dim, dtype=complex),))

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "operators": [
                [[z.real, z.imag] for z in k.reshape(-1)] for k in self.operators
            ],
        }

    @classmethod
    def from_json_dict(cls, data) -> "KrausChannel":
        d = int(data["dim"])
        ops = tuple(
            np.array([complex(re, im) for re, im in flat]).reshape(d, d)
            for flat in data["operators"]
        )
        return cls(ops)


def apply_to_qubit(channel: KrausChannel, rho: np.ndarray, qubit: int) -> np.ndarray:
    """Apply a single-qubit channel to one qubit of a larger register."""
    if channel.dim != 2:
        raise ValueError("apply_to_qubit expects a single-qubit channel")
    rho = np.asarray(rho, dtype=complex)
    n = _num_qubits(rho.shape[0])
    out = np.zeros_like(rho)
    for k in channel.operators:
        arr = rho.reshape([2] * (2 * n))
        arr = np.tensordot(k, arr, axes=([1], [qubit]))
        arr = np.moveaxis(arr, 0, qubit)
        arr = np.tensordot(arr, k.conj(), axes=([n + qubit], [1]))
        arr = np.moveaxis(arr, -1, n + qubit)
        out += arr.reshape(rho.shape)
    return out


# ---------------------------------------------------------------------------
# Choi / superoperator forms
# ---------------------------------------------------------------------------


def choi(channel: KrausChannel) -> np.ndarray:
    """Choi matrix sum_ij |i><j| kron Phi(|i><j|); trace equals dim."""
    d = channel.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    omega = np.zeros(d * d, dtype=complex)
    omega[:: d + 1] = 1.0  # sum_i |i>|i>
    for k in channel.operators:
        v = (np.kron(np.eye(d), k) @ omega).reshape(-1)
        out += np.outer(v, v.conj())
    return out


def kraus_to_superop(channel: KrausChannel) -> np.ndarray:
    return sum(np.kron(k.conj(), k) for k in channel.operators)


def choi_superop_reshuffle(m: np.ndarray) -> np.ndarray:
    """Convert between Choi and column-stacking superoperator (an involution)."""
    d2 = m.shape[0]
    d = int(round(math.sqrt(d2)))
    t = m.reshape(d, d, d, d)
    return t.transpose(3, 1, 2, 0).reshape(d2, d2)


def superop_to_choi(s: np.ndarray) -> np.ndarray:
    return choi_superop_reshuffle(s)


def choi_to_superop(c: np.ndarray) -> np.ndarray:
    return choi_superop_reshuffle(c)


def is_cptp(choi_matrix: np.ndarray, tol: float = 1e-10) -> bool:
    """PSD within ``tol`` and trace-preserving within ``tol``."""
    c = np.asarray(choi_matrix, dtype=complex)
    if np.abs(c - c.conj().T).max() > tol:
        return False
    if float(np.linalg.eigvalsh((c + c.conj().T) / 2).min()) < -tol:
        return False
    d = int(round(math.sqrt(c.shape[0])))
    marginal = partial_trace(c, list(range(_num_qubits(d))))
    return bool(np.abs(marginal - np.eye(d)).max() <= tol)


def choi_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Trace distance between trace-normalized Choi matrices."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return trace_distance(a / np.trace(a).real, b / np.trace(b).real)


# ---------------------------------------------------------------------------
# Bell-state stabilizer pumps (two qubits)
# ---------------------------------------------------------------------------


def _pump_kraus(p: float, flip: np.ndarray, stabilizer: np.ndarray) -> KrausChannel:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"pump strength p={p} outside [0, 1]")
    plus = (np.eye(4) + stabilizer) / 2
    minus = (np.eye(4) - stabilizer) / 2
    e1 = math.sqrt(p) * flip @ plus
    e2 = minus + math.sqrt(1.0 - p) * plus
    ops = [k for k in (e1, e2) if np.abs(k).max() > 0]
    return KrausChannel(tuple(ops)).check()


def pump_zz(p: float) -> KrausChannel:
    """Pump from the +1 into the -1 eigenspace of Z(x)Z with probability p."""
    return _pump_kraus(p, tensor(I2, PAULI_X), tensor(PAULI_Z, PAULI_Z))


def pump_xx(p: float) -> KrausChannel:
    """Pump from the +1 into the -1 eigenspace of X(x)X with probability p."""
    return _pump_kraus(p, tensor(I2, PAULI_Z), tensor(PAULI_X, PAULI_X))


# ---------------------------------------------------------------------------
# Collisional dephasing (single qubit)
# ---------------------------------------------------------------------------


def _dephasing(identity_weight: float) -> KrausChannel:
    w = min(max(identity_weight, 0.0), 1.0)
    ops = []
    if w > 0:
        ops.append(math.sqrt(w) * I2)
    if w < 1:
        ops.append(math.sqrt(1.0 - w) * PAULI_Z)
    return KrausChannel(tuple(ops)).check()


def collisional_correlated(n: int, g_tau: float) -> KrausChannel:
    """Dephasing after n collisions with classically correlated ancillae.

    The phases accumulated in successive collisions add coherently, giving
    identity weight cos^2(n g tau).
    """
    if n < 0:
        raise ValueError("collision count must be >= 0")
    return _dephasing(math.cos(n * g_tau) ** 2)


def collisional_separable(n: int, g_tau: float) -> KrausChannel:
    """Dephasing after n collisions with independent |+> ancillae.

    Each collision multiplies the coherence by cos(2 g tau), giving identity
    weight (1 + cos^n(2 g tau)) / 2.
    """
    if n < 0:
        raise ValueError("collision count must be >= 0")
    return _dephasing(0.5 * (1.0 + math.cos(2 * g_tau) ** n))


# ---------------------------------------------------------------------------
# Amplitude damping from a zero-temperature Lorentzian bath
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ADParams:
    """Coupling strength and spectral width of the Lorentzian bath.

    The dynamics depend only on the ratio R = gamma0 / lam.  ``omega0`` is
    the qubit frequency entering the spectral density; it sets no observable
    in the rotating frame and is kept only for completeness.
    """

    gamma0: float
    lam: float
    omega0: float | None = None

    def __post_init__(self):
        if self.gamma0 <= 0 or self.lam <= 0:
            raise ValueError("gamma0 and lam must be positive")

    @property
    def R(self) -> float:
        return self.gamma0 / self.lam

    @classmethod
    def from_ratio(cls, R: float, lam: float = 1.0) -> "ADParams":
        return cls(gamma0=R * lam, lam=lam)


def c1(t: float, params: ADParams) -> float:
    """Excited-state survival amplitude, c1(0) = 1.

    A single complex-arithmetic expression covers both the overdamped
    (R < 1/2, hyperbolic) and oscillatory (R > 1/2) regimes; R = 1/2 uses
    the explicit limit.  The result is clamped to [-1, 1].
    """
    if t < 0:
        raise ValueError("time must be >= 0")
    lam, R = params.lam, params.R
    disc = 1.0 - 2.0 * R
    if abs(disc) < 1e-12:
        val = math.exp(-lam * t / 2) * (1.0 + lam * t / 2)
    else:
        d = cmath.sqrt(complex(disc))
        x = lam * t / 2 * d
        z = cmath.exp(-lam * t / 2) * (cmath.cosh(x) + cmath.sinh(x) / d)
        if abs(z.imag) > 1e-12 * max(1.0, abs(z.real)):
            raise ArithmeticError(f"survival amplitude has imaginary residue {z.imag}")
        val = z.real
    return min(1.0, max(-1.0, val))


def c1_dot(t: float, params: ADParams) -> float:
    """Analytic time derivative of the survival amplitude."""
    lam, R = params.lam, params.R
    disc = 1.0 - 2.0 * R
    if abs(disc) < 1e-12:
        return -(lam**2) * t / 4 * math.exp(-lam * t / 2)
    d = cmath.sqrt(complex(disc))
    x = lam * t / 2 * d
    z = -lam * R * cmath.exp(-lam * t / 2) * cmath.sinh(x) / d
    return z.real


def gamma_ad(t: float, params: ADParams) -> float:
    """Time-dependent decay rate -2 Re[c1'(t) / c1(t)].

    Diverges at zeros of the survival amplitude; raises SingularityError
    within 1e-12 of one.
    """
    c = c1(t, params)
    if abs(c) < 1e-12:
        raise SingularityError(f"decay rate diverges at t={t} (c1 ~ 0)")
    return -2.0 * c1_dot(t, params) / c


def amplitude_damping_channel(t: float, params: ADParams) -> KrausChannel:
    """Single-qubit damping with survival amplitude c = c1(t).

    Basis |0> = ground, |1> = excited: the excited population scales by c**2
    and coherences by c (which may be negative in the oscillatory regime).
    """
    c = c1(t, params)
    k0 = np.array([[1, 0], [0, c]], dtype=complex)
    k1 = np.array([[0, math.sqrt(max(0.0, 1.0 - c * c))], [0, 0]], dtype=complex)
    return KrausChannel((k0, k1)).check()


# ---------------------------------------------------------------------------
# Depolarizing and Pauli channels (single qubit)
# ---------------------------------------------------------------------------


def depolarizing(p: float) -> KrausChannel:
    """Keep the state with weight 1 - 3p/4, each Pauli error with weight p/4."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing strength p={p} outside [0, 1]")
    return pauli_channel(1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p)


def pauli_channel(p0: float, p1: float, p2: float, p3: float) -> KrausChannel:
    """Random-Pauli channel sum_i p_i sigma_i rho sigma_i."""
    ps = np.array([p0, p1, p2, p3], dtype=float)
    if ps.min() < 0:
        raise ValueError(f"negative Pauli probability in {ps}")
    if abs(ps.sum() - 1.0) > 1e-10:
        raise ValueError(f"Pauli probabilities sum to {ps.sum()}, not 1")
    mats = (I2, PAULI_X, PAULI_Y, PAULI_Z)
    ops = tuple(math.sqrt(p) * m for p, m in zip(ps, mats) if p > 0)
    return KrausChannel(ops).check()


def pauli_map_eigenvalues(p0: float, p1: float, p2: float, p3: float) -> tuple:
    """Bloch-axis scaling factors (lambda_x, lambda_y, lambda_z)."""
    return (p0 + p1 - p2 - p3, p0 - p1 + p2 - p3, p0 - p1 - p2 + p3)


@dataclass(frozen=True)
class PauliRates:
    """Time-dependent rates of the random-Pauli master equation.

    ``cumulants``, when given, returns the exact integrals (G_x, G_y, G_z) of
    the rates over [0, t]; otherwise adaptive Simpson quadrature is used.
    ``eigenvalues_fn`` may override the map eigenvalues entirely, which
    allows rate families whose integrals diverge at isolated times but whose
    dynamical map continues through them.
    """

    gamma_x: Callable[[float], float]
    gamma_y: Callable[[float], float]
    gamma_z: Callable[[float], float]
    cumulants: Callable[[float], tuple] | None = None
    eigenvalues_fn: Callable[[float], tuple] | None = None

    def rates(self, t: float) -> tuple:
        return (self.gamma_x(t), self.gamma_y(t), self.gamma_z(t))

    def eigenvalues(self, t: float) -> tuple:
        """Map eigenvalues (lambda_x, lambda_y, lambda_z) at time t."""
        if self.eigenvalues_fn is not None:
            return self.eigenvalues_fn(t)
        if self.cumulants is not None:
            gx, gy, gz = self.cumulants(t)
        else:
            gx = adaptive_simpson(self.gamma_x, 0.0, t)
            gy = adaptive_simpson(self.gamma_y, 0.0, t)
            gz = adaptive_simpson(self.gamma_z, 0.0, t)
        return (math.exp(-gy - gz), math.exp(-gx - gz), math.exp(-gx - gy))


def constant_pauli_rates(gx: float, gy: float, gz: float) -> PauliRates:
    return PauliRates(
        gamma_x=lambda t: gx,
        gamma_y=lambda t: gy,
        gamma_z=lambda t: gz,
        cumulants=lambda t: (gx * t, gy * t, gz * t),
    )


def eternal_rate_family(lam: float = 1.0, omega: float = 0.5) -> PauliRates:
    """gamma_x = gamma_y = lam/2, gamma_z = -omega tanh(omega t)/2 (< 0 for t > 0)."""
    return PauliRates(
        gamma_x=lambda t: lam / 2,
        gamma_y=lambda t: lam / 2,
        gamma_z=lambda t: -omega * math.tanh(omega * t) / 2,
        cumulants=lambda t: (lam * t / 2, lam * t / 2, -0.5 * math.log(math.cosh(omega * t))),
    )


def tan_rate_family(lam: float = 0.1, omega: float = 2.0) -> PauliRates:
    """gamma_x = gamma_y = lam/2, gamma_z = omega tan(omega t)/2.

    The z rate is singular at odd multiples of pi/(2 omega); the map
    eigenvalues stay finite and continue through as
    lambda_x = lambda_y = exp(-lam t/2) sqrt(|cos(omega t)|), which solves
    the same master equation on every regular interval and vanishes at the
    singular times.
    """

    def eigenvalues(t: float) -> tuple:
        lx = math.exp(-lam * t / 2) * math.sqrt(abs(math.cos(omega * t)))
        return (lx, lx, math.exp(-lam * t))

    return PauliRates(
        gamma_x=lambda t: lam / 2,
        gamma_y=lambda t: lam / 2,
        gamma_z=lambda t: omega * math.tan(omega * t) / 2,
        eigenvalues_fn=eigenvalues,
    )


def pauli_rates_to_probabilities(rates: PauliRates, t: float) -> tuple:
    """Pauli weights (p0, p1, p2, p3) of the map integrated up to time t.

    Raises CompletePositivityError when a weight falls below -1e-6; smaller
    negative residues are clamped to 0.
    """
    if t < 0:
        raise ValueError("time must be >= 0")
    lx, ly, lz = rates.eigenvalues(t)
    ps = np.array(
        [
            (1 + lx + ly + lz) / 4,
            (1 + lx - ly - lz) / 4,
            (1 - lx + ly - lz) / 4,
            (1 - lx - ly + lz) / 4,
        ]
    )
    if ps.min() < -1e-6:
        raise CompletePositivityError(
            f"map not completely positive at t={t}: weights {ps.tolist()}"
        )
    ps = np.clip(ps, 0.0, None)
    ps /= ps.sum()
    return tuple(float(p) for p in ps)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> float:
    """Adaptive Simpson quadrature of f over [a, b]."""
    if b < a:
        raise ValueError("integration bounds must be ordered")
    if b == a:
        return 0.0

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6 * (f0 + 4 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        xm = (x0 + x2) / 2
        xl, xr = (x0 + xm) / 2, (xm + x2) / 2
        fl, fr = f(xl), f(xr)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        if depth <= 0 or abs(left + right - whole) <= 15 * eps:
            return left + right + (left + right - whole) / 15
        return recurse(x0, xm, f0, fl, f1, left, eps / 2, depth - 1) + recurse(
            xm, x2, f1, fr, f2, right, eps / 2, depth - 1
        )

    m = (a + b) / 2
    fa, fm, fb = f(a), f(m), f(b)
    return recurse(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 48)


# ---------------------------------------------------------------------------
# Master-equation integration (fixed-step RK4)
# ---------------------------------------------------------------------------


def integrate_master_equation(
    hamiltonian: np.ndarray | None,
    jump_operators: Sequence[np.ndarray],
    rate_fns: Sequence[Callable[[float], float]],
    rho0: np.ndarray,
    t_grid: Sequence[float],
    rate_cap_step: float = 1e-3,
) -> list:
    """Evolve rho0 through the time-local generator on an increasing grid.

    Classical RK4 with a fixed step bounded by min(grid spacing,
    rate_cap_step / max|rate|), the maximum taken over grid points and
    midpoints.  Trace preservation is checked to 1e-8 at every grid point.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1:
        raise ValueError("t_grid must be a nonempty 1-d array")
    if t_grid[0] != 0.0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must increase from 0")
    if len(jump_operators) != len(rate_fns):
        raise ValueError("need one rate function per jump operator")
    rho = np.asarray(rho0, dtype=complex).copy()
    d = rho.shape[0]
    ham = None if hamiltonian is None else np.asarray(hamiltonian, dtype=complex)
    jumps = [np.asarray(v, dtype=complex) for v in jump_operators]
    jdagj = [v.conj().T @ v for v in jumps]

    probes = np.union1d(t_grid, (t_grid[:-1] + t_grid[1:]) / 2) if len(t_grid) > 1 else t_grid
    max_rate = 0.0
    for fn in rate_fns:
        vals = np.abs([fn(t) for t in probes])
        if not np.all(np.isfinite(vals)):
            raise IntegrationError("rate function is not finite on the grid")
        max_rate = max(max_rate, float(vals.max()))
    if ham is not None:
        # coherent oscillation frequencies also bound the usable step
        max_rate = max(max_rate, 2.0 * float(np.linalg.norm(ham, 2)))
    h_max = rate_cap_step / max_rate if max_rate > 0 else math.inf
    if len(t_grid) > 1:
        h_max = min(h_max, float(np.diff(t_grid).min()))
    if h_max <= 0:
        raise IntegrationError("step size underflow")

    def generator(t: float, r: np.ndarray) -> np.ndarray:
        out = np.zeros_like(r)
        if ham is not None:
            out += -1j * (ham @ r - r @ ham)
        for fn, v, vv in zip(rate_fns, jumps, jdagj):
            g = fn(t)
            out += g * (v @ r @ v.conj().T - 0.5 * (vv @ r + r @ vv))
        return out

    result = []
    t_cur = t_grid[0]
    for t_next in t_grid:
        span = t_next - t_cur
        if span > 0:
            n_step = 1 if span <= h_max else int(math.ceil(span / h_max))
            h = span / n_step
            for _ in range(n_step):
                k1 = generator(t_cur, rho)
                k2 = generator(t_cur + h / 2, rho + h / 2 * k1)
                k3 = generator(t_cur + h / 2, rho + h / 2 * k2)
                k4 = generator(t_cur + h, rho + h * k3)
                rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                t_cur += h
            t_cur = t_next
        if not np.all(np.isfinite(rho)):
            raise IntegrationError(f"integration produced NaN/Inf at t={t_next}")
        if abs(np.trace(rho).real - 1.0) > 1e-8:
            raise IntegrationError(f"trace drifted beyond 1e-8 at t={t_next}")
        result.append(rho.copy())
    return result


# ---------------------------------------------------------------------------
# Divisibility diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalReport:
    """CP diagnosis of one intermediate map between consecutive grid times."""

    t_start: float
    t_end: float
    min_eigenvalue: float
    condition_number: float
    flagged: bool
    indeterminate: bool = False


def cp_divisibility_scan(
    choi_fn: Callable[[float], np.ndarray],
    t_grid: Sequence[float],
    tol: float = 1e-8,
    cond_limit: float = 1e10,
) -> list:
    """Check complete positivity of the maps between consecutive grid times.

    For s < t the intermediate map is formed as Phi_t . Phi_s^{-1} in
    superoperator form and converted to a Choi matrix; an interval is flagged
    when the minimum Choi eigenvalue drops below -tol.  Near-singular Phi_s
    (condition number above ``cond_limit``) yields an indeterminate interval
    rather than a verdict.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    supers = [choi_to_superop(np.asarray(choi_fn(t), dtype=complex)) for t in t_grid]
    reports = []
    for i in range(len(t_grid) - 1):
        s_mat, t_mat = supers[i], supers[i + 1]
        cond = float(np.linalg.cond(s_mat))
        if not math.isfinite(cond) or cond > cond_limit:
            reports.append(
                IntervalReport(t_grid[i], t_grid[i + 1], math.nan, cond, False, True)
            )
            continue
        intermediate = t_mat @ np.linalg.inv(s_mat)
        c = superop_to_choi(intermediate)
        min_eig = float(np.linalg.eigvalsh((c + c.conj().T) / 2).min())
        reports.append(
            IntervalReport(t_grid[i], t_grid[i + 1], min_eig, cond, min_eig < -tol)
        )
    return reports


def p_divisibility_scan_pauli(
    eigenvalues_fn: Callable[[float], tuple],
    t_grid: Sequence[float],
    tol: float = 1e-9,
) -> list:
    """Flag intervals where any |lambda_j| grows, violating P-divisibility.

    For Pauli-diagonal map families, positivity of the intermediate map is
    equivalent to none of the Bloch-axis scaling magnitudes increasing.
    Returns (start_index, end_index) pairs of flagged grid intervals.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    lams = np.abs([eigenvalues_fn(t) for t in t_grid])
    flagged = []
    for i in range(len(t_grid) - 1):
        if np.any(lams[i + 1] > lams[i] + tol):
            flagged.append((i, i + 1))
    return flagged
