"""Covariance-matrix algebra for one- and two-mode Gaussian states.

Conventions: hbar = 1, vacuum quadrature variance 1/2, quadrature ordering
``(x_a, p_a, x_b, p_b)``. Entropies are in nats.

Most functions accept either float64 arrays or object arrays holding
``mpmath.mpf`` entries. The latter path is used by :mod:`cvthermo.thermo`
to resolve purities that differ from 1 by far less than machine epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import mpmath
import numpy as np

from cvthermo.errors import InvalidStateError, UnphysicalStateError

PHYSICALITY_TOL = 1e-10
SYMMETRY_TOL = 1e-12
PURITY_CLAMP = 1e-9
ENTROPY_PURE_BRANCH = 1e-12
SYMPLECTIC_DET_TOL = 1e-12

OMEGA_1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA_2 = np.kron(np.eye(2), OMEGA_1)

Real = Union[float, mpmath.mpf]


def _is_mp(*values) -> bool:
    return any(isinstance(v, mpmath.mpf) for v in values)


def _is_object(m: np.ndarray) -> bool:
    return m.dtype == object


def _as_float(m: np.ndarray) -> np.ndarray:
    if _is_object(m):
        return np.array([[float(x) for x in row] for row in m])
    return m


def _sqrt(x: Real) -> Real:
    return mpmath.sqrt(x) if _is_mp(x) else math.sqrt(x)


def _log(x: Real) -> Real:
    return mpmath.log(x) if _is_mp(x) else math.log(x)


def _det2(m: np.ndarray) -> Real:
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def _det(m: np.ndarray) -> Real:
    if m.shape == (2, 2):
        return _det2(m)
    if _is_object(m):
        return mpmath.det(mpmath.matrix(m.tolist()))
    return float(np.linalg.det(m))


def _inv2(m: np.ndarray) -> np.ndarray:
    """Closed-form (adjugate / determinant) inverse of a 2x2 matrix."""
    det = _det2(m)
    if det == 0:
        raise InvalidStateError("singular 2x2 block in conditional update")
    adj = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=m.dtype)
    return adj / det


def _check_square_symmetric(m: np.ndarray, size: int) -> None:
    if m.shape != (size, size):
        raise InvalidStateError(f"expected a {size}x{size} matrix, got shape {m.shape}")
    mf = _as_float(m)
    if not np.all(np.isfinite(mf)):
        raise InvalidStateError("covariance matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(mf))))
    if np.max(np.abs(mf - mf.T)) > SYMMETRY_TOL * scale:
        raise InvalidStateError("covariance matrix is not symmetric")


def rotation(phi: float) -> np.ndarray:
    """Phase-space rotation R(phi) acting on one mode's (x, p)."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def squeezer(s: float) -> np.ndarray:
    """Single-mode squeezer diag(e^s, e^-s)."""
    return np.diag([math.exp(s), math.exp(-s)])


def euler_symplectic(theta1: float, s: float, theta2: float) -> np.ndarray:
    """Element of Sp(2,R) in Euler form R(theta1) diag(e^s, e^-s) R(theta2)."""
    return rotation(theta1) @ squeezer(s) @ rotation(theta2)


@dataclass(frozen=True)
class SingleModeCovariance:
    """2x2 covariance matrix of one mode."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m)
        if m.dtype != object:
            m = m.astype(float)
        _check_square_symmetric(m, 2)
        det = _det2(m)
        if not m[0, 0] > 0 or det < 0.25 - PHYSICALITY_TOL:
            raise UnphysicalStateError(
                f"single-mode covariance violates uncertainty: det={float(det):.6g} < 1/4",
                min_eigenvalue=float(det) - 0.25,
            )
        object.__setattr__(self, "m", m)

    @property
    def det(self) -> Real:
        return _det2(self.m)

    @classmethod
    def vacuum(cls) -> "SingleModeCovariance":
        return cls(np.eye(2) / 2)

    @classmethod
    def thermal(cls, n_bar: Real) -> "SingleModeCovariance":
        v = n_bar + (mpmath.mpf(1) / 2 if _is_mp(n_bar) else 0.5)
        dtype = object if _is_mp(n_bar) else float
        return cls(np.array([[v, 0 * v], [0 * v, v]], dtype=dtype))


class PhysicalityReport(NamedTuple):
    ok: bool
    min_eigenvalue: float


def validate_physicality(sigma) -> PhysicalityReport:
    """Check the bona-fide condition ``sigma + i/2 Omega >= 0``.

    Args:
        sigma: a :class:`TwoModeCovariance` or a raw 4x4 array.

    Returns:
        ``PhysicalityReport(ok, min_eigenvalue)``; ``ok`` iff the smallest
        eigenvalue is at least ``-1e-10``.

    Raises:
        InvalidStateError: the matrix is not square-symmetric of size 4.
    """
    m = sigma.m if isinstance(sigma, TwoModeCovariance) else np.asarray(sigma)
    _check_square_symmetric(m, 4)
    mf = _as_float(m)
    eig = np.linalg.eigvalsh(mf + 0.5j * OMEGA_2)
    lo = float(eig.min())
    return PhysicalityReport(lo >= -PHYSICALITY_TOL, lo)


@dataclass(frozen=True)
class TwoModeCovariance:
    """4x4 covariance matrix in ``(x_a, p_a, x_b, p_b)`` ordering."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m)
        if m.dtype != object:
            m = m.astype(float)
        report = validate_physicality(m)
        if not report.ok:
            raise UnphysicalStateError(
                "two-mode covariance violates sigma + i/2 Omega >= 0 "
                f"(min eigenvalue {report.min_eigenvalue:.3e})",
                min_eigenvalue=report.min_eigenvalue,
            )
        object.__setattr__(self, "m", m)

    @property
    def block_a(self) -> np.ndarray:
        return self.m[:2, :2]

    @property
    def block_b(self) -> np.ndarray:
        return self.m[2:, 2:]

    @property
    def block_c(self) -> np.ndarray:
        return self.m[:2, 2:]

    @classmethod
    def vacuum(cls) -> "TwoModeCovariance":
        return cls(np.eye(4) / 2)


@dataclass(frozen=True)
class StandardFormParams:
    a: Real
    b: Real
    c1: Real
    c2: Real

    def __post_init__(self):
        if not (self.a >= 0.5 - PHYSICALITY_TOL and self.b >= 0.5 - PHYSICALITY_TOL):
            raise UnphysicalStateError(
                f"local noise below vacuum: a={float(self.a)}, b={float(self.b)}",
                min_eigenvalue=float(min(self.a, self.b)) - 0.5,
            )

    @property
    def is_symmetric(self) -> bool:
        return self.a == self.b


@dataclass(frozen=True)
class GaussianMeasurement:
    """Gaussian measurement of strength ``lam`` and rotation ``phi``."""

    lam: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"measurement strength must be positive and finite, got {self.lam}")
        if not math.isfinite(self.phi):
            raise ValueError("measurement rotation must be finite")

    @classmethod
    def heterodyne(cls, phi: float = 0.0) -> "GaussianMeasurement":
        """Coherent-state projection: strength fixed to 1."""
        return cls(1.0, phi)


class SymplecticInvariants(NamedTuple):
    det_sigma: float
    delta: float


def build_symmetric_state(p: StandardFormParams) -> TwoModeCovariance:
    """Assemble ``[[diag(a,a), diag(c1,c2)], [diag(c1,c2), diag(b,b)]]``.

    Raises:
        UnphysicalStateError: with the most negative eigenvalue of
            ``sigma + i/2 Omega`` as diagnostic.
    """
    dtype = object if _is_mp(p.a, p.b, p.c1, p.c2) else float
    zero = 0 * p.a
    m = np.array(
        [
            [p.a, zero, p.c1, zero],
            [zero, p.a, zero, p.c2],
            [p.c1, zero, p.b, zero],
            [zero, p.c2, zero, p.b],
        ],
        dtype=dtype,
    )
    return TwoModeCovariance(m)


def build_tms_thermal(n_bar: Real, r: Real) -> TwoModeCovariance:
    """Two-mode squeezed thermal state with occupation ``n_bar`` and squeezing ``r``.

    ``a = b = (n_bar + 1/2) cosh 2r`` and ``c1 = -c2 = (n_bar + 1/2) sinh 2r``.
    Passing ``mpmath.mpf`` arguments yields an object-dtype matrix.
    """
    if _is_mp(n_bar, r):
        n_bar, r = mpmath.mpf(n_bar), mpmath.mpf(r)
        if not (mpmath.isfinite(n_bar) and mpmath.isfinite(r)):
            raise ValueError("n_bar and r must be finite")
        half = mpmath.mpf(1) / 2
        cosh, sinh = mpmath.cosh, mpmath.sinh
    else:
        if not (math.isfinite(n_bar) and math.isfinite(r)):
            raise ValueError("n_bar and r must be finite")
        half, cosh, sinh = 0.5, math.cosh, math.sinh
    if n_bar < 0:
        raise ValueError(f"n_bar must be non-negative, got {n_bar}")
    scale = n_bar + half
    a = scale * cosh(2 * r)
    c = scale * sinh(2 * r)
    return build_symmetric_state(StandardFormParams(a, a, c, -c))


def measurement_covariance(meas: GaussianMeasurement) -> SingleModeCovariance:
    """Covariance ``R(phi) diag(lam/2, 1/(2 lam)) R(phi)^T`` of the measurement.

    At ``lam == 1`` the rotation drops out and ``diag(1/2, 1/2)`` is returned
    exactly for every ``phi``.
    """
    if meas.lam == 1.0:
        return SingleModeCovariance(np.eye(2) / 2)
    rot = rotation(meas.phi)
    m = rot @ np.diag([meas.lam / 2, 1 / (2 * meas.lam)]) @ rot.T
    return SingleModeCovariance((m + m.T) / 2)


def conditional_state_after_b_measurement(
    sigma: TwoModeCovariance, meas: GaussianMeasurement
) -> SingleModeCovariance:
    """Covariance of mode a after a Gaussian measurement on mode b.

    ``sigma_a - c (sigma_b + gamma)^-1 c^T``. Displacements are not tracked;
    the returned covariance does not depend on the measurement outcome.
    """
    gamma = measurement_covariance(meas).m
    if _is_object(sigma.m):
        gamma = gamma.astype(object)
    c = sigma.block_c
    inv = _inv2(sigma.block_b + gamma)
    out = sigma.block_a - c @ inv @ c.T
    out = (out + out.T) / 2
    return SingleModeCovariance(out)


def purity(sigma: Union[SingleModeCovariance, TwoModeCovariance]) -> Real:
    """Purity ``1 / (2^n sqrt(det sigma))`` for an n-mode Gaussian state.

    Values in ``(1, 1 + 1e-9]`` are rounding and clamp to 1.
    """
    n_modes = sigma.m.shape[0] // 2
    det = _det(sigma.m)
    if not det > 0:
        raise InvalidStateError(f"non-positive covariance determinant {float(det):.3e}")
    mu = 1 / (2**n_modes * _sqrt(det))
    if mu > 1 + PURITY_CLAMP:
        raise InvalidStateError(f"purity {float(mu)!r} exceeds 1")
    if mu > 1:
        mu = mu * 0 + 1
    return mu


def von_neumann_entropy(mu: Real) -> Real:
    """Entropy in nats of a single-mode Gaussian state with purity ``mu``.

    ``(1-mu)/(2mu) ln((1+mu)/(1-mu)) - ln(2mu/(1+mu))``. For floats, purities
    within 1e-12 of 1 return 0; for ``mpf`` the cut is at working precision.
    """
    if not (0 < mu <= 1):
        raise ValueError(f"purity must lie in (0, 1], got {mu!r}")
    if _is_mp(mu):
        cut = 16 * mpmath.eps
    else:
        cut = ENTROPY_PURE_BRANCH
    if 1 - mu < cut:
        return mu * 0
    return (1 - mu) / (2 * mu) * _log((1 + mu) / (1 - mu)) - _log(2 * mu / (1 + mu))


def symplectic_invariants(sigma: TwoModeCovariance) -> SymplecticInvariants:
    """``det sigma`` and ``Delta = det A + det B + 2 det C`` from the 2x2 blocks."""
    m = _as_float(sigma.m)
    delta = _det2(m[:2, :2]) + _det2(m[2:, 2:]) + 2 * _det2(m[:2, 2:])
    return SymplecticInvariants(float(np.linalg.det(m)), float(delta))


def conditional_determinant_invariant_form(inv: SymplecticInvariants, a: float) -> float:
    """Determinant of the heterodyne-conditioned mode-a covariance from invariants.

    Valid for symmetric states (``b = a``, ``c2 = -c1``), where
    ``2a^2 - c1^2 - c2^2 = Delta``. The numerator is
    ``det sigma + a Delta / 2 + a^2 / 4``, which factors as
    ``(a^2 - c^2 + a/2)^2`` for the symmetric class.
    """
    if a < 0.5 - PHYSICALITY_TOL:
        raise ValueError(f"local invariant a must be >= 1/2, got {a}")
    return (inv.det_sigma + a * inv.delta / 2 + a * a / 4) / (a + 0.5) ** 2


def is_symplectic(s: np.ndarray, tol: float = SYMPLECTIC_DET_TOL) -> bool:
    s = np.asarray(s, dtype=float)
    return s.shape == (2, 2) and abs(np.linalg.det(s) - 1.0) <= tol


def apply_local_symplectic(
    sigma: TwoModeCovariance, s_a: np.ndarray, s_b: np.ndarray
) -> TwoModeCovariance:
    """Apply ``(s_a ⊕ s_b) sigma (s_a ⊕ s_b)^T``.

    Raises:
        ValueError: either block has determinant further than 1e-12 from 1.
    """
    for name, s in (("s_a", s_a), ("s_b", s_b)):
        if not is_symplectic(s):
            raise ValueError(f"{name} is not in Sp(2,R): det={np.linalg.det(np.asarray(s, float))!r}")
    local = np.zeros((4, 4))
    local[:2, :2] = s_a
    local[2:, 2:] = s_b
    out = local @ _as_float(sigma.m) @ local.T
    return TwoModeCovariance((out + out.T) / 2)


def symplectic_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Sorted symplectic eigenvalues (moduli of eigenvalues of ``i Omega m``)."""
    m = _as_float(np.asarray(m))
    n = m.shape[0] // 2
    omega = np.kron(np.eye(n), OMEGA_1)
    ev = np.abs(np.linalg.eigvals(1j * omega @ m))
    return np.sort(ev)[::2]


def partial_transpose(sigma: TwoModeCovariance) -> np.ndarray:
    """Covariance after ``p_b -> -p_b`` (not necessarily physical)."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    return flip @ _as_float(sigma.m) @ flip


def log_negativity(sigma: TwoModeCovariance) -> float:
    """``max(0, -ln(2 nu_min))`` with ``nu_min`` the smallest symplectic
    eigenvalue of the partially transposed covariance matrix."""
    nu_min = symplectic_eigenvalues(partial_transpose(sigma))[0]
    return max(0.0, -math.log(2 * nu_min))
