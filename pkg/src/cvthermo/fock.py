"""Brute-force truncated Fock-space oracle for the Gaussian pipeline.

Nothing here uses covariance matrices: the two-mode squeezed thermal state
is built as ``S2(r) (rho_th ⊗ rho_th) S2(r)^dagger`` with the squeezer
obtained as a matrix exponential of the truncated generator
``a^dag b^dag - a b``, mode b is projected on a coherent state, and
entropies come from eigenvalues of the reduced density matrix.

The generator conserves ``n_a - n_b``, so it is exponentiated one
difference-sector at a time. Two-mode density matrices are stored as
``scipy.sparse`` CSR arrays of shape ``((n_cut+1)^2, (n_cut+1)^2)`` with
basis index ``n_a * (n_cut+1) + n_b``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from cvthermo.errors import ConvergenceError, InvalidStateError, RepresentabilityError
from cvthermo.thermo import Method, ThermalContext, WorkResult

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-8
EIGENVALUE_FLOOR = 1e-14
N_CUT_MIN = 4
N_CUT_START = 16
N_CUT_STEP = 8
N_CUT_CEILING = 80
STABILITY_TOL = 1e-6

DEFAULT_OUTCOMES = (0j, 1 + 0j, 1 + 1j, -2j)


@dataclass(frozen=True)
class OracleConfig:
    """Cutoff policy for the oracle.

    ``n_cut="auto"`` grows the cutoff in steps of 8 from 16 until the trace
    deficit is below ``trace_tolerance`` and the observed quantities change
    by less than ``stability_tolerance`` between successive cutoffs; the
    ceiling is 80.
    """

    n_cut: Union[int, Literal["auto"]] = "auto"
    trace_tolerance: float = TRACE_TOL
    beta_samples: tuple = DEFAULT_OUTCOMES
    stability_tolerance: float = STABILITY_TOL
    ceiling: int = N_CUT_CEILING

    def __post_init__(self):
        if self.n_cut != "auto" and (not isinstance(self.n_cut, int) or self.n_cut < N_CUT_MIN):
            raise ValueError(f"n_cut must be an integer >= {N_CUT_MIN} or 'auto', got {self.n_cut!r}")
        object.__setattr__(self, "beta_samples", tuple(complex(b) for b in self.beta_samples))

    def cutoffs(self):
        if self.n_cut != "auto":
            return [self.n_cut]
        return list(range(N_CUT_START, self.ceiling + 1, N_CUT_STEP))


@dataclass(frozen=True)
class FockState:
    """Truncated density matrix on one or two modes.

    Attributes:
        rho: dense ``(n_cut+1)``-square array for one mode, sparse CSR of
            side ``(n_cut+1)^2`` for two modes.
        trace_deficit: ``1 - Tr(rho)`` before renormalization.
        outcome_density: Husimi value ``<beta|rho_b|beta>/pi`` of the
            heterodyne outcome that produced this state, if any.
    """

    rho: Union[np.ndarray, sp.csr_array]
    n_cut: int
    n_modes: int
    trace_deficit: float = 0.0
    outcome_density: float | None = field(default=None, compare=False)

    def __post_init__(self):
        dim = (self.n_cut + 1) ** self.n_modes
        if self.rho.shape != (dim, dim):
            raise InvalidStateError(f"rho has shape {self.rho.shape}, expected {(dim, dim)}")
        herm = abs(self.rho - self.rho.conj().T).max()
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"rho is not Hermitian (max deviation {herm:.2e})")
        tr = self.rho.trace().real
        if abs(tr - 1) > TRACE_TOL:
            raise InvalidStateError(f"rho has trace {tr!r}")
        if self.n_modes == 1:
            lo = np.linalg.eigvalsh(self.rho).min()
            if lo < -POSITIVITY_TOL:
                raise InvalidStateError(f"rho has negative eigenvalue {lo:.3e}")

    def dense(self) -> np.ndarray:
        return self.rho.toarray() if sp.issparse(self.rho) else np.asarray(self.rho)


def _index(n_a, n_b, n_cut):
    return n_a * (n_cut + 1) + n_b


def thermal_weights(n_bar: float, n_cut: int) -> np.ndarray:
    """Boltzmann weights ``n^k / (n+1)^(k+1)`` for ``k = 0..n_cut`` (not renormalized)."""
    k = np.arange(n_cut + 1)
    if n_bar == 0:
        return (k == 0).astype(float)
    q = n_bar / (n_bar + 1)
    return (1 - q) * q**k


def _sector(d: int, n_cut: int):
    k = np.arange(n_cut + 1 - abs(d))
    return k + max(d, 0), k + max(-d, 0)


def _squeezer_block(n_a: np.ndarray, n_b: np.ndarray, r: float) -> np.ndarray:
    # a^dag b^dag |n_a, n_b> = sqrt((n_a+1)(n_b+1)) |n_a+1, n_b+1>
    hop = np.sqrt((n_a[:-1] + 1.0) * (n_b[:-1] + 1.0))
    gen = np.diag(hop, -1) - np.diag(hop, 1)
    return scipy.linalg.expm(r * gen)


def build_tms_thermal_fock(n_bar: float, r: float, cfg: OracleConfig | None = None) -> FockState:
    """Two-mode squeezed thermal state in a truncated Fock basis.

    In auto mode the cutoff grows until the trace deficit meets
    ``cfg.trace_tolerance`` and the extracted covariance moves by less than
    ``cfg.stability_tolerance`` between successive cutoffs. The trace
    deficit alone misses the squeezer's truncation.

    Raises:
        ConvergenceError: the ceiling is reached first.
    """
    cfg = cfg or OracleConfig()
    if n_bar < 0 or r < 0:
        raise ValueError("n_bar and r must be non-negative")
    if cfg.n_cut != "auto":
        return _build_at_cutoff(n_bar, r, cfg.n_cut)
    last, prev_cov, change = None, None, math.inf
    for n_cut in cfg.cutoffs():
        state = _build_at_cutoff(n_bar, r, n_cut)
        cov = fock_covariance(state)
        if prev_cov is not None:
            change = float(np.max(np.abs(cov - prev_cov)))
            if state.trace_deficit < cfg.trace_tolerance and change < cfg.stability_tolerance:
                return state
        last, prev_cov = state, cov
    raise ConvergenceError(
        f"not converged at n_cut={last.n_cut}: trace deficit {last.trace_deficit:.2e}, "
        f"covariance change {change:.2e}",
        n_cut=last.n_cut,
        trace_deficit=last.trace_deficit,
    )


def _build_at_cutoff(n_bar: float, r: float, n_cut: int) -> FockState:
    w = thermal_weights(n_bar, n_cut)
    rows, cols, vals = [], [], []
    lowest = 0.0
    for d in range(-n_cut, n_cut + 1):
        n_a, n_b = _sector(d, n_cut)
        s = _squeezer_block(n_a, n_b, r)
        block = (s * (w[n_a] * w[n_b])) @ s.T
        lowest = min(lowest, np.linalg.eigvalsh(block).min())
        idx = _index(n_a, n_b, n_cut)
        rows.append(np.repeat(idx, len(idx)))
        cols.append(np.tile(idx, len(idx)))
        vals.append(block.ravel())
    if lowest < -POSITIVITY_TOL:
        raise InvalidStateError(f"squeezed state has negative eigenvalue {lowest:.3e}")
    dim = (n_cut + 1) ** 2
    rho = sp.csr_array(
        (np.concatenate(vals).astype(complex), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )
    trace = rho.trace().real
    return FockState(rho / trace, n_cut, 2, trace_deficit=float(1 - trace))


def coherent_amplitudes(beta: complex, n_cut: int) -> np.ndarray:
    """``<n|beta>`` for ``n = 0..n_cut``."""
    n = np.arange(n_cut + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    mag = np.exp(-abs(beta) ** 2 / 2 + n * math.log(abs(beta)) - log_fact / 2) if beta != 0 else (n == 0) * 1.0
    return mag * np.exp(1j * n * np.angle(beta))


def heterodyne_project_b(state: FockState, beta: complex) -> FockState:
    """Condition mode a on finding mode b in coherent state ``|beta>``.

    Returns the normalized ``<beta|_b rho |beta>_b``.

    Raises:
        RepresentabilityError: ``|beta|^2 > n_cut/4``.
    """
    if state.n_modes != 2:
        raise InvalidStateError("heterodyne projection needs a two-mode state")
    if abs(beta) ** 2 > state.n_cut / 4:
        raise RepresentabilityError(
            f"|beta|^2={abs(beta) ** 2:.3g} too large for n_cut={state.n_cut}"
        )
    dim = state.n_cut + 1
    bra = np.conj(coherent_amplitudes(beta, state.n_cut))
    proj = sp.kron(sp.eye_array(dim), sp.csr_array(bra[None, :]), format="csr")
    rho_a = (proj @ state.rho @ proj.conj().T).toarray()
    rho_a = (rho_a + rho_a.conj().T) / 2
    p = rho_a.trace().real
    return FockState(rho_a / p, state.n_cut, 1, trace_deficit=0.0, outcome_density=p / math.pi)


def partial_trace(state: FockState, keep: Literal["a", "b"]) -> np.ndarray:
    """Reduced density matrix of one mode of a two-mode state."""
    if state.n_modes == 1:
        return state.dense()
    dim = state.n_cut + 1
    coo = state.rho.tocoo()
    i_a, i_b = divmod(coo.row, dim)
    j_a, j_b = divmod(coo.col, dim)
    out = np.zeros((dim, dim), dtype=complex)
    if keep == "a":
        mask = i_b == j_b
        np.add.at(out, (i_a[mask], j_a[mask]), coo.data[mask])
    elif keep == "b":
        mask = i_a == j_a
        np.add.at(out, (i_b[mask], j_b[mask]), coo.data[mask])
    else:
        raise ValueError(f"mode must be 'a' or 'b', got {keep!r}")
    return out


def shannon_entropy_of(rho: np.ndarray) -> float:
    p = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    p = p[p > EIGENVALUE_FLOOR]
    return float(-np.sum(p * np.log(p)))


def reduced_entropy(state: FockState, mode: Literal["a", "b"] = "a") -> float:
    """``-Tr(rho_m ln rho_m)`` of the reduced state of ``mode`` (nats)."""
    return shannon_entropy_of(partial_trace(state, mode))


def thermal_fock(n_bar: float, n_cut: int) -> FockState:
    """Single-mode thermal density matrix, renormalized after truncation."""
    w = thermal_weights(n_bar, n_cut)
    total = w.sum()
    return FockState(np.diag(w / total).astype(complex), n_cut, 1, trace_deficit=float(1 - total))


def _ladder(n_cut: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_cut + 1)), 1).astype(complex)


def _quadrature_ops(n_cut: int):
    """x, p and the exact second moments x^2, p^2, (xp+px)/2 in the truncated basis.

    The squares are built from ``a^2``, ``a^dag 2`` and ``n`` so the top
    Fock level is not corrupted by truncating ``a a^dag``.
    """
    a = _ladder(n_cut)
    ad = a.conj().T
    num = np.diag(np.arange(n_cut + 1)).astype(complex)
    one = np.eye(n_cut + 1)
    x = (a + ad) / math.sqrt(2)
    p = (a - ad) / (1j * math.sqrt(2))
    a2, ad2 = a @ a, ad @ ad
    xx = (a2 + ad2 + 2 * num + one) / 2
    pp = -(a2 + ad2 - 2 * num - one) / 2
    xp = (a2 - ad2) / (2j)
    return x, p, xx, pp, xp


def fock_covariance(state: FockState) -> np.ndarray:
    """Symmetrized quadrature covariance matrix extracted from ``rho``.

    Ordering ``(x_a, p_a[, x_b, p_b])``, vacuum variance 1/2.
    """
    n_cut = state.n_cut
    x, p, xx, pp, xp = _quadrature_ops(n_cut)
    if state.n_modes == 1:
        rho = state.dense()

        def ev(op):
            return float(np.trace(rho @ op).real)

        mx, mp = ev(x), ev(p)
        sxp = ev(xp) - mx * mp
        return np.array([[ev(xx) - mx * mx, sxp], [sxp, ev(pp) - mp * mp]])

    rho = state.rho
    one = sp.eye_array(n_cut + 1)

    def ev2(op):
        # Tr(rho O) = sum_ij rho_ij O_ji
        return float(rho.multiply(sp.csr_array(op).T).sum().real)

    def on_a(op):
        return sp.kron(sp.csr_array(op), one)

    def on_b(op):
        return sp.kron(one, sp.csr_array(op))

    first = [on_a(x), on_a(p), on_b(x), on_b(p)]
    means = np.array([ev2(op) for op in first])
    cov = np.empty((4, 4))
    local = {0: (on_a(xx), on_a(pp), on_a(xp)), 2: (on_b(xx), on_b(pp), on_b(xp))}
    for off, (sxx, spp, sxp) in local.items():
        cov[off, off] = ev2(sxx)
        cov[off + 1, off + 1] = ev2(spp)
        cov[off, off + 1] = cov[off + 1, off] = ev2(sxp)
    for i in (0, 1):
        for j in (2, 3):
            cov[i, j] = cov[j, i] = ev2(first[i] @ first[j])
    return cov - np.outer(means, means)


@dataclass(frozen=True)
class OracleRun:
    """Cutoff-converged oracle quantities for one ``(n_bar, r)`` point."""

    n_bar: float
    r: float
    n_cut: int
    trace_deficit: float
    s_ther: float
    s_meas: dict
    conditional_cov: dict

    def max_outcome_spread(self) -> float:
        """Largest pairwise difference of conditional covariances across outcomes."""
        covs = list(self.conditional_cov.values())
        if len(covs) < 2:
            return 0.0
        return max(float(np.max(np.abs(c1 - c2))) for c1, c2 in itertools.combinations(covs, 2))


def _evaluate(n_bar: float, r: float, n_cut: int, outcomes: Sequence[complex]):
    state = _build_at_cutoff(n_bar, r, n_cut)
    # same pipeline without correlations, so r = 0 cancels exactly
    s_ther = reduced_entropy(heterodyne_project_b(_build_at_cutoff(n_bar, 0.0, n_cut), outcomes[0]), "a")
    s_meas, covs = {}, {}
    for beta in outcomes:
        cond = heterodyne_project_b(state, beta)
        s_meas[beta] = reduced_entropy(cond, "a")
        covs[beta] = fock_covariance(cond)
    return state, s_ther, s_meas, covs


def run_oracle(n_bar: float, r: float, cfg: OracleConfig | None = None, outcomes=None) -> OracleRun:
    """Evaluate conditional entropies and covariances with a converged cutoff.

    Convergence in auto mode: trace deficit below tolerance and all
    entropies and conditional covariances moving by less than
    ``cfg.stability_tolerance`` when ``n_cut`` grows by 8.

    Raises:
        ConvergenceError: the ceiling is reached first.
    """
    cfg = cfg or OracleConfig()
    outcomes = tuple(cfg.beta_samples if outcomes is None else (complex(b) for b in outcomes))
    if n_bar < 0 or r < 0:
        raise ValueError("n_bar and r must be non-negative")
    need = max(abs(b) ** 2 for b in outcomes) * 4
    cutoffs = [n for n in cfg.cutoffs() if n >= need]
    if not cutoffs:
        raise RepresentabilityError(f"outcomes need n_cut >= {need:.0f}")
    prev = None
    for n_cut in cutoffs:
        state, s_ther, s_meas, covs = _evaluate(n_bar, r, n_cut, outcomes)
        run = OracleRun(n_bar, r, n_cut, state.trace_deficit, s_ther, s_meas, covs)
        if cfg.n_cut != "auto":
            return run
        if prev is not None and state.trace_deficit < cfg.trace_tolerance:
            change = max(
                [abs(s_ther - prev.s_ther)]
                + [abs(s_meas[b] - prev.s_meas[b]) for b in outcomes]
                + [float(np.max(np.abs(covs[b] - prev.conditional_cov[b]))) for b in outcomes]
            )
            if change < cfg.stability_tolerance:
                return run
        prev = run
    raise ConvergenceError(
        f"oracle for n_bar={n_bar}, r={r} not stable below n_cut={prev.n_cut}",
        n_cut=prev.n_cut,
        trace_deficit=prev.trace_deficit,
    )


def oracle_work(
    n_bar: float, r: float, cfg: OracleConfig | None = None, outcome: complex = 0j
) -> WorkResult:
    """Extracted work from the Fock oracle, in units of hbar omega_a.

    ``beta_a = ln(1 + 1/n_bar)``; ``n_bar = 0`` gives zero work.
    """
    run = run_oracle(n_bar, r, cfg, outcomes=(outcome,))
    ctx = ThermalContext.from_n_bar(n_bar)
    s_meas = run.s_meas[complex(outcome)]
    w = 0.0 if ctx.zero_temperature else (run.s_ther - s_meas) / ctx.beta_a
    return WorkResult(w, s_meas, run.s_ther, Method.ORACLE)
