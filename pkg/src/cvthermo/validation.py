"""Cross-validation suite behind ``cvthermo validate``.

Each check returns a :class:`CheckResult`; the suite passes iff every check
does. The Gaussian pipeline is compared against the Fock oracle, against
its own invariant-form shortcut, and against the limiting cases.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from cvthermo import fock, gaussian, thermo
from cvthermo.errors import ConvergenceError, RegimeWarning


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.detail} ({self.seconds:.2f}s)"

    def as_dict(self) -> dict:
        return asdict(self)


GRIDS = {
    "full": {
        "n_bar": (0.0, 0.05, 0.1, 0.3),
        "r": (0.0, 0.5, 1.0, 1.5),
        "samples": 1000,
        "outcome_points": ((0.1, 1.0), (0.05, 0.5), (0.3, 1.5)),
    },
    "small": {
        "n_bar": (0.0, 0.1),
        "r": (0.0, 1.0),
        "samples": 100,
        "outcome_points": ((0.1, 1.0),),
    },
}

OUTCOMES = (0j, 1 + 0j, 1 + 1j, -2j)
LOW_T_BETAS = (10.0, 20.0, 50.0, 100.0)


def random_symplectic(rng: np.random.Generator, s_max: float = 1.5) -> np.ndarray:
    """Random Sp(2,R) element from its Euler decomposition."""
    return gaussian.euler_symplectic(
        rng.uniform(0, 2 * math.pi), rng.uniform(-s_max, s_max), rng.uniform(0, 2 * math.pi)
    )


def rel_err(x: float, ref: float) -> float:
    return abs(x - ref) / abs(ref)


def check_oracle_equivalence(grid: dict) -> CheckResult:
    worst = 0.0
    failures = []
    for n_bar, r in itertools.product(grid["n_bar"], grid["r"]):
        ctx = thermo.ThermalContext.from_n_bar(n_bar)
        w_gauss = thermo.extracted_work_exact(ctx, r).w_over_hw
        try:
            w_fock = fock.oracle_work(n_bar, r).w_over_hw
        except ConvergenceError as exc:
            failures.append(f"({n_bar},{r}) {exc}")
            continue
        if abs(w_gauss) < 1e-6:
            ok = abs(w_fock - w_gauss) <= 1e-8
        else:
            err = rel_err(w_fock, w_gauss)
            worst = max(worst, err)
            ok = err <= 1e-4
        if not ok:
            failures.append(f"({n_bar},{r}) oracle={w_fock:.10g} gaussian={w_gauss:.10g}")
    detail = f"{len(grid['n_bar']) * len(grid['r'])} points, worst rel err {worst:.2e}"
    if failures:
        detail += "; " + "; ".join(failures)
    return CheckResult("oracle equivalence", not failures, detail)


def check_outcome_independence(grid: dict) -> CheckResult:
    worst = 0.0
    for n_bar, r in grid["outcome_points"]:
        run = fock.run_oracle(n_bar, r, outcomes=OUTCOMES)
        worst = max(worst, run.max_outcome_spread())
    return CheckResult(
        "outcome independence",
        worst < 1e-6,
        f"max pairwise conditional-covariance spread {worst:.2e} over beta in {OUTCOMES}",
    )


def check_heterodyne_fixing(rng: np.random.Generator) -> CheckResult:
    target = np.eye(2) / 2
    bad = 0
    for phi in rng.uniform(0, 2 * math.pi, size=100):
        m = gaussian.measurement_covariance(gaussian.GaussianMeasurement(1.0, phi)).m
        bad += not np.array_equal(m, target)
    return CheckResult("heterodyne fixing", bad == 0, f"{bad}/100 rotations differ from diag(1/2,1/2)")


def check_invariants(rng: np.random.Generator, samples: int) -> CheckResult:
    worst_inv = 0.0
    for _ in range(samples):
        sigma = gaussian.build_tms_thermal(rng.uniform(0, 1), rng.uniform(0, 1))
        ref = gaussian.symplectic_invariants(sigma)
        moved = gaussian.apply_local_symplectic(sigma, random_symplectic(rng), random_symplectic(rng))
        got = gaussian.symplectic_invariants(moved)
        worst_inv = max(worst_inv, rel_err(got.det_sigma, ref.det_sigma), rel_err(got.delta, ref.delta))
    worst_det = 0.0
    worst_id = 0.0
    het = gaussian.GaussianMeasurement.heterodyne()
    for _ in range(samples):
        a, c = _random_symmetric(rng)
        sigma = gaussian.build_symmetric_state(gaussian.StandardFormParams(a, a, c, -c))
        inv = gaussian.symplectic_invariants(sigma)
        direct = gaussian.conditional_state_after_b_measurement(sigma, het).det
        via_inv = gaussian.conditional_determinant_invariant_form(inv, a)
        worst_det = max(worst_det, rel_err(via_inv, direct))
        worst_id = max(worst_id, abs(2 * a * a - 2 * c * c - inv.delta) / inv.delta)
    ok = worst_inv <= 1e-9 and worst_det <= 1e-10 and worst_id <= 1e-12
    return CheckResult(
        "invariant machinery",
        ok,
        f"local-symplectic drift {worst_inv:.1e}, conditional det {worst_det:.1e}, "
        f"I=Delta identity {worst_id:.1e}",
    )


def _random_symmetric(rng: np.random.Generator):
    """Random physical (a, c) with b = a, c2 = -c1: needs a - |c| >= 1/2."""
    nu = rng.uniform(0.5, 2.0)
    r = rng.uniform(0, 1.5)
    return nu * math.cosh(2 * r), nu * math.sinh(2 * r) * rng.choice([-1, 1])


def check_limits() -> CheckResult:
    problems = []
    for beta in (1.0, 10.0, 20.0, 50.0, 100.0):
        ctx = thermo.ThermalContext(beta)
        if thermo.extracted_work_exact(ctx, 0.0).w_over_hw != 0.0:
            problems.append(f"W(r=0) != 0 at beta={beta}")
        prev = -math.inf
        for r in np.round(np.arange(0, 3.01, 0.1), 10):
            res = thermo.extracted_work_exact(ctx, float(r))
            if res.w_over_hw < prev:
                problems.append(f"W decreases at beta={beta}, r={r}")
            if not (0 <= res.w_over_hw <= res.s_ther / beta):
                problems.append(f"bound violated at beta={beta}, r={r}")
            prev = res.w_over_hw
    zero = thermo.ThermalContext.from_n_bar(0.0)
    for r in (0.0, 0.5, 2.0):
        if thermo.extracted_work_exact(zero, r).w_over_hw != 0.0:
            problems.append(f"W(n_bar=0) != 0 at r={r}")
    return CheckResult("limits", not problems, "; ".join(problems) or "r=0, n_bar=0, monotonicity, bound")


def check_discrete_cases() -> CheckResult:
    problems = []
    for beta in (1.0, 5.0, 10.0, 50.0):
        p = thermo.DiscreteCaseParams.from_beta(beta, thermo.OmegaKind.CAVITY)
        w2 = thermo.discrete_number_state_work(p)
        ctx = thermo.ThermalContext.from_n_bar(p.x)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            w_max = thermo.extracted_work_closed_form(ctx, 40.0).w_over_hw
        if abs(w2 - p.x) > 1e-12 * p.x or abs(w_max - w2) > 1e-12 * w2:
            problems.append(f"number-state mismatch at beta={beta}")
        dicke = thermo.DiscreteCaseParams.from_beta(beta, thermo.OmegaKind.LEVEL_SPACING, 100)
        if thermo.dicke_symmetrization_work(dicke) != w2:
            problems.append(f"Dicke mismatch at beta={beta}")
    return CheckResult("discrete comparators", not problems, "; ".join(problems) or "x, xi->1 limit, Dicke")


def low_t_errors(r: float = 1.0, betas=LOW_T_BETAS) -> dict:
    """Relative error of each low-T approximation against the exact value."""
    import mpmath

    out = {"mu1": [], "s_meas": [], "s_ther": []}
    het = gaussian.GaussianMeasurement.heterodyne()
    for beta in betas:
        ctx = thermo.ThermalContext(beta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            approx = thermo.low_t_approximations(ctx, r)
        with mpmath.workdps(thermo.working_dps(beta)):
            mu1 = thermo.conditional_purity(ctx, r, het)
            out["mu1"].append(float(abs(approx.mu1_approx - mu1) / mu1))
        s_meas = thermo.entropy_after_measurement_exact(ctx, r, het)
        s_ther = thermo.entropy_thermal_exact(ctx)
        out["s_meas"].append(rel_err(float(approx.s_meas_approx), s_meas))
        out["s_ther"].append(rel_err(float(approx.s_ther_approx), s_ther))
    return out


def check_low_t_chain() -> CheckResult:
    errs = low_t_errors()
    ok = all(all(b < a for a, b in zip(v, v[1:])) for v in errs.values())
    detail = ", ".join(f"{k}: " + " > ".join(f"{e:.1e}" for e in v) for k, v in errs.items())
    return CheckResult("low-T approximation chain", ok, detail)


def check_invariant_form_work(rng: np.random.Generator, samples: int) -> CheckResult:
    worst = 0.0
    for _ in range(max(10, samples // 10)):
        beta = float(rng.uniform(1.0, 60.0))
        r = float(rng.uniform(0, 1.5))
        ctx = thermo.ThermalContext(beta)
        sigma = gaussian.apply_local_symplectic(
            gaussian.build_tms_thermal(ctx.n_bar, r), random_symplectic(rng, 1.0), random_symplectic(rng, 1.0)
        )
        got = thermo.extracted_work_invariant_form(sigma, ctx).w_over_hw
        ref = thermo.extracted_work_exact(ctx, r).w_over_hw
        if ref != 0:
            worst = max(worst, rel_err(got, ref))
    return CheckResult("invariant-form work", worst <= 1e-9, f"worst rel err {worst:.1e} vs exact pipeline")


def run_all(grid_name: str = "full", seed: int = 20240611) -> list[CheckResult]:
    grid = GRIDS[grid_name]
    rng = np.random.default_rng(seed)
    checks: list[Callable[[], CheckResult]] = [
        lambda: check_oracle_equivalence(grid),
        lambda: check_outcome_independence(grid),
        lambda: check_heterodyne_fixing(rng),
        lambda: check_invariants(rng, grid["samples"]),
        lambda: check_invariant_form_work(rng, grid["samples"]),
        check_limits,
        check_discrete_cases,
        check_low_t_chain,
    ]
    results = []
    for check in checks:
        t0 = time.perf_counter()
        try:
            res = check()
        except Exception as exc:  # report, keep going
            res = CheckResult(getattr(check, "__name__", "check"), False, f"raised {exc!r}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
    return results
