"""Extracted work from measurement backaction on two-mode Gaussian states.

Work is reported in units of hbar*omega_a, so ``W/(hbar omega_a) =
(S_ther - S_meas) / beta_a`` with ``beta_a = hbar omega_a / (k_B T)``.

At optical frequencies beta_a is ~100 and the occupation ~1e-44, so the
purities involved sit far closer to 1 than float64 can resolve. The exact
pipeline therefore runs the covariance algebra in mpmath at a working
precision scaled with beta_a, and converts only the final entropies.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import mpmath

from cvthermo.errors import InconsistentContextError, RegimeWarning, UnsupportedStateError
from cvthermo.gaussian import (
    GaussianMeasurement,
    SingleModeCovariance,
    TwoModeCovariance,
    build_tms_thermal,
    conditional_state_after_b_measurement,
    purity,
    symplectic_invariants,
    von_neumann_entropy,
)

MAX_BETA = 700.0
CONTEXT_REL_TOL = 1e-6
SYMMETRY_REL_TOL = 1e-7


def occupation(beta_a: float) -> float:
    """Bose occupation ``1 / (e^beta_a - 1)``.

    Raises:
        ValueError: ``beta_a`` is not positive and finite, or so large the
            occupation underflows.
    """
    if not (math.isfinite(beta_a) and beta_a > 0):
        raise ValueError(f"beta_a must be positive and finite, got {beta_a!r}")
    if beta_a > MAX_BETA:
        raise ValueError(f"beta_a={beta_a} exceeds {MAX_BETA}; occupation underflows")
    return 1.0 / math.expm1(beta_a)


def working_dps(beta_a: float) -> int:
    """Decimal digits needed to resolve ``n_bar**2`` next to 1, plus headroom."""
    if math.isinf(beta_a):
        return 40
    return 40 + math.ceil(2 * beta_a / math.log(10))


@dataclass(frozen=True)
class ThermalContext:
    """Inverse temperature in units of the mode energy, plus its occupation.

    ``beta_a = inf`` represents the zero-temperature limit with ``n_bar = 0``.
    """

    beta_a: float
    n_bar: float = field(init=False)

    def __post_init__(self):
        if self.beta_a == math.inf:
            n_bar = 0.0
        else:
            n_bar = occupation(self.beta_a)
        object.__setattr__(self, "n_bar", n_bar)

    @classmethod
    def from_n_bar(cls, n_bar: float) -> "ThermalContext":
        if not (math.isfinite(n_bar) and n_bar >= 0):
            raise ValueError(f"n_bar must be finite and non-negative, got {n_bar!r}")
        if n_bar == 0:
            return cls(math.inf)
        return cls(math.log1p(1.0 / n_bar))

    @property
    def zero_temperature(self) -> bool:
        return self.beta_a == math.inf

    def n_bar_mp(self) -> mpmath.mpf:
        """Occupation at the current mpmath precision."""
        if self.zero_temperature:
            return mpmath.mpf(0)
        return 1 / mpmath.expm1(mpmath.mpf(self.beta_a))


class Method(str, enum.Enum):
    EXACT = "exact"
    CLOSED_FORM = "closed_form"
    LOW_T_APPROX = "low_t_approx"
    INVARIANT_FORM = "invariant_form"
    ORACLE = "oracle"


@dataclass(frozen=True)
class WorkResult:
    w_over_hw: float
    s_meas: float
    s_ther: float
    method: Method


def _work(ctx: ThermalContext, s_ther, s_meas, method: Method) -> WorkResult:
    if ctx.zero_temperature:
        w = 0.0
    else:
        w = float((s_ther - s_meas) / ctx.beta_a)
    return WorkResult(w, float(s_meas), float(s_ther), method)


def xi(r: float) -> float:
    """Entanglement factor ``1 - 2/(1 + cosh 2r)``, evaluated as ``tanh(r)**2``."""
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    return math.tanh(r) ** 2


def _s_ther_mp(ctx: ThermalContext):
    return von_neumann_entropy(purity(SingleModeCovariance.thermal(ctx.n_bar_mp())))


def conditional_purity(ctx: ThermalContext, r: float, meas: GaussianMeasurement) -> mpmath.mpf:
    """Purity of mode a after measuring mode b, at ``working_dps(beta_a)`` digits."""
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    with mpmath.workdps(working_dps(ctx.beta_a)):
        sigma = build_tms_thermal(ctx.n_bar_mp(), mpmath.mpf(r))
        return +purity(conditional_state_after_b_measurement(sigma, meas))


def _s_meas_mp(ctx: ThermalContext, r: float, meas: GaussianMeasurement):
    sigma = build_tms_thermal(ctx.n_bar_mp(), mpmath.mpf(r))
    return von_neumann_entropy(purity(conditional_state_after_b_measurement(sigma, meas)))


def entropy_after_measurement_exact(
    ctx: ThermalContext, r: float, meas: GaussianMeasurement
) -> float:
    """Entropy (nats) of mode a conditioned on a measurement of mode b."""
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    with mpmath.workdps(working_dps(ctx.beta_a)):
        return float(_s_meas_mp(ctx, r, meas))


def entropy_thermal_exact(ctx: ThermalContext) -> float:
    """Entropy (nats) of the rethermalized mode, purity ``1/(1 + 2 n_bar)``."""
    with mpmath.workdps(working_dps(ctx.beta_a)):
        return float(_s_ther_mp(ctx))


def extracted_work_exact(
    ctx: ThermalContext, r: float, meas: GaussianMeasurement | None = None
) -> WorkResult:
    """``(S_ther - S_meas)/beta_a`` through the full covariance pipeline.

    ``meas`` defaults to heterodyne. Other strengths are accepted; they model
    an apparatus rather than environmental monitoring.
    """
    if meas is None:
        meas = GaussianMeasurement.heterodyne()
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    with mpmath.workdps(working_dps(ctx.beta_a)):
        s_ther = _s_ther_mp(ctx)
        s_meas = _s_meas_mp(ctx, r, meas)
        return _work(ctx, s_ther, s_meas, Method.EXACT)


def _regime_check(ctx: ThermalContext, r: float) -> None:
    if ctx.beta_a < 10:
        warnings.warn(
            f"low-temperature formulas used at beta_a={ctx.beta_a:.3g} < 10", RegimeWarning, stacklevel=3
        )
    if r > ctx.beta_a / 10:
        warnings.warn(
            f"r={r} is not small against beta_a={ctx.beta_a:.3g}", RegimeWarning, stacklevel=3
        )


def extracted_work_closed_form(ctx: ThermalContext, r: float) -> WorkResult:
    """Low-temperature law ``W = xi(r) n_bar hbar omega_a``.

    Entropies are reported at the same order: ``S_ther ~ n_bar beta_a`` and
    ``S_meas ~ 2 n_bar beta_a / (1 + cosh 2r)``.
    """
    _regime_check(ctx, r)
    x = xi(r)
    s_ther = ctx.n_bar * ctx.beta_a if not ctx.zero_temperature else 0.0
    s_meas = (1 - x) * s_ther
    return WorkResult(x * ctx.n_bar, s_meas, s_ther, Method.CLOSED_FORM)


class LowTApproximations(NamedTuple):
    """Leading low-temperature forms, as mpmath numbers at working precision.

    ``s_meas_approx`` is the fully reduced form ``2 n beta / (1 + cosh 2r)``;
    ``s_meas_intermediate`` keeps the logarithmic bracket before that
    reduction.
    """

    mu1_approx: mpmath.mpf
    s_meas_approx: mpmath.mpf
    s_ther_approx: mpmath.mpf
    s_meas_intermediate: mpmath.mpf


def low_t_approximations(ctx: ThermalContext, r: float) -> LowTApproximations:
    _regime_check(ctx, r)
    with mpmath.workdps(working_dps(ctx.beta_a)):
        n = ctx.n_bar_mp()
        beta = mpmath.mpf(ctx.beta_a) if not ctx.zero_temperature else mpmath.mpf(0)
        half = mpmath.mpf(1) / 2
        a = (n + half) * mpmath.cosh(2 * mpmath.mpf(r))
        mu1 = 1 - 2 * n / (a + half)
        s_meas = 2 * n * beta / (1 + mpmath.cosh(2 * mpmath.mpf(r)))
        s_ther = n * beta
        if n == 0:
            s_mid = mpmath.mpf(0)
        else:
            w = n / (a + half)
            s_mid = w * (mpmath.log(2) - mpmath.log(2 * n) + mpmath.log(a + half)) - 2 * w
        return LowTApproximations(+mu1, +s_meas, +s_ther, +s_mid)


def extracted_work_low_t(ctx: ThermalContext, r: float) -> WorkResult:
    """Work from the reduced low-T entropies, evaluated at working precision."""
    approx = low_t_approximations(ctx, r)
    return _work(ctx, approx.s_ther_approx, approx.s_meas_approx, Method.LOW_T_APPROX)


def extracted_work_invariant_form(sigma: TwoModeCovariance, ctx: ThermalContext) -> WorkResult:
    """Extracted work for any symmetric two-mode state, via symplectic invariants.

    The local invariant ``a = sqrt(det A)`` and ``Delta`` are read off
    ``sigma``; the conditional purity is ``(a + 1/2) / (2 (z + a/2))`` with
    ``z = (n_bar + 1/2)^2``. ``Delta/2`` must agree with ``z``.

    Raises:
        UnsupportedStateError: the diagonal blocks have different
            determinants, or ``det sigma != Delta^2/4`` (``c2 != -c1``).
        InconsistentContextError: ``Delta/2`` disagrees with
            ``(n_bar + 1/2)^2`` beyond 1e-6 relative.
    """
    m = sigma.m.astype(float) if sigma.m.dtype == object else sigma.m
    det_a = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    det_b = m[2, 2] * m[3, 3] - m[2, 3] * m[3, 2]
    if abs(det_a - det_b) > SYMMETRY_REL_TOL * max(det_a, det_b):
        raise UnsupportedStateError(
            f"asymmetric state: det A={det_a:.12g}, det B={det_b:.12g}"
        )
    inv = symplectic_invariants(sigma)
    if abs(inv.det_sigma - inv.delta**2 / 4) > SYMMETRY_REL_TOL * inv.delta**2 / 4:
        raise UnsupportedStateError(
            "state is not in the c2 = -c1 class: "
            f"det sigma={inv.det_sigma:.12g}, Delta^2/4={inv.delta**2 / 4:.12g}"
        )
    z_ctx = (ctx.n_bar + 0.5) ** 2
    if abs(z_ctx - inv.delta / 2) > CONTEXT_REL_TOL * inv.delta / 2:
        raise InconsistentContextError(
            f"context gives (n_bar+1/2)^2={z_ctx:.12g} but Delta/2={inv.delta / 2:.12g}"
        )
    with mpmath.workdps(working_dps(ctx.beta_a)):
        half = mpmath.mpf(1) / 2
        z = (ctx.n_bar_mp() + half) ** 2
        a_floor = mpmath.sqrt(z)
        # a^2 - c^2 = z, so a >= sqrt(z); float input can undershoot by rounding
        a = max(mpmath.sqrt(mpmath.mpf(det_a)), a_floor)

        def mu_meas(a_loc):
            return min((a_loc + half) / (2 * (z + a_loc / 2)), mpmath.mpf(1))

        s_meas = von_neumann_entropy(mu_meas(a))
        # at c = 0 the same expression reduces to the thermal purity 1/(1 + 2 n_bar)
        s_ther = von_neumann_entropy(mu_meas(a_floor))
        return _work(ctx, s_ther, s_meas, Method.INVARIANT_FORM)


class OmegaKind(str, enum.Enum):
    CAVITY = "cavity"
    LEVEL_SPACING = "level_spacing"


@dataclass(frozen=True)
class DiscreteCaseParams:
    """Low-temperature excitation probability ``x = e^-beta`` of a discrete system."""

    x: float
    omega_kind: OmegaKind
    n_particles: int = 1

    def __post_init__(self):
        if not 0 <= self.x < 1:
            raise ValueError(f"x must lie in [0, 1), got {self.x}")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")

    @classmethod
    def from_beta(cls, beta: float, omega_kind: OmegaKind, n_particles: int = 1) -> "DiscreteCaseParams":
        if not beta > 0:
            raise ValueError(f"beta must be positive, got {beta}")
        return cls(math.exp(-beta), OmegaKind(omega_kind), n_particles)


def discrete_number_state_work(p: DiscreteCaseParams) -> float:
    """Work (units of hbar omega_a) from ``(|1,0> + |0,1>)/sqrt 2`` at low T.

    Conditioned on finding mode b in ``|1>``; equals ``x``.
    """
    if p.omega_kind is not OmegaKind.CAVITY:
        raise ValueError("number-state case needs omega_kind=cavity")
    return p.x


def dicke_symmetrization_work(p: DiscreteCaseParams) -> float:
    """Work (units of hbar omega_eg) from the single-excitation Dicke state.

    Conditioned on one particle being found excited; equals ``x`` for any N.
    """
    if p.omega_kind is not OmegaKind.LEVEL_SPACING:
        raise ValueError("Dicke case needs omega_kind=level_spacing")
    if p.n_particles < 2:
        raise ValueError("Dicke case needs at least two particles")
    return p.x
