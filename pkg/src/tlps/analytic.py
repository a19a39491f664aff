"""Expected sojourn time of the two-level processor sharing queue.

Four routes to the mean sojourn time ``T(theta)``:

``two_phase_sojourn``      closed form, two phases only
``nphase_sojourn_linear``  N x N linear system for the Laplace values ``L_i``
``nphase_sojourn_series``  operator (Neumann) series in the Laplace domain
``upper_bound``            explicit majorant

All of them split ``T(theta)`` as ``first_term + t_bps / (1 - rho_theta)``
where ``t_bps`` is the mean time spent in the low-priority queue.

The operator ``Phi1`` acts on Laplace values at the phase rates through the
matrix ``M`` of :class:`OperatorMatrix`; the series is ``sum_i f @ M^i @ f0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, GridTooCoarseError, InvalidModelError
from .hyperexp import TlpsModel, TruncatedStats, truncated_stats
from .linsolve import solve


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    m_matrix: np.ndarray
    f0: np.ndarray
    f: np.ndarray


@dataclass(frozen=True)
class SojournBreakdown:
    theta: float
    t_total: float
    t_bps: float
    first_term: float
    method: str
    rho_theta: float
    degenerate: bool = False
    iterations: int | None = None

    def identity_defect(self) -> float:
        """Relative mismatch in ``t_total = first_term + t_bps / (1 - rho_theta)``."""
        rebuilt = self.first_term + self.t_bps / (1.0 - self.rho_theta)
        return abs(self.t_total - rebuilt) / abs(self.t_total)


@dataclass(frozen=True, eq=False)
class VolterraSolution:
    grid: np.ndarray
    alpha_prime: np.ndarray
    alpha: np.ndarray
    l_values: np.ndarray
    t_bps: float
    t_bps_quadrature: float
    defect: float

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])


def ps_sojourn(model: TlpsModel) -> float:
    return model.mean / (1.0 - model.rho)


def _as_stats(model: TlpsModel, theta) -> TruncatedStats:
    if isinstance(theta, TruncatedStats):
        return theta
    return truncated_stats(model, theta)


def _first_term(st: TruncatedStats) -> float:
    return (st.x1 + st.w_bar * st.ccdf_at_theta) / (1.0 - st.rho_theta)


def _ps_limit(model: TlpsModel, st: TruncatedStats, method: str) -> SojournBreakdown:
    t = ps_sojourn(model)
    return SojournBreakdown(
        theta=st.theta,
        t_total=t,
        t_bps=0.0,
        first_term=t,
        method=method,
        rho_theta=st.rho_theta,
        degenerate=True,
        iterations=0,
    )


def operator_matrix(stats: TruncatedStats) -> OperatorMatrix:
    fi = stats.tail_components
    mu = stats.rates
    inv = 1.0 / np.add.outer(mu, mu)
    f0 = inv @ fi
    m = stats.gamma * inv * fi[None, :]
    m[np.diag_indices_from(m)] += stats.gamma * f0
    return OperatorMatrix(m_matrix=m, f0=f0, f=fi)


def two_phase_sojourn(model: TlpsModel, theta) -> SojournBreakdown:
    if model.dist.n_phases != 2:
        raise InvalidModelError(f"two-phase formula needs N=2, got N={model.dist.n_phases}")
    st = _as_stats(model, theta)
    mu1, mu2 = model.dist.rates
    rho = model.rho
    fbar = st.ccdf_at_theta
    tail = st.tail_mean
    first = _first_term(st)
    # b / Fbar taken from the cancelled form so Fbar -> 0 stays finite
    bps_part = (
        st.b_over_f
        * (mu1 * mu2 * tail**2 + st.delta_rho * fbar**2)
        / (2.0 * (mu1 + mu2 - st.gamma * fbar))
    )
    t_total = first + tail / (1.0 - rho) + bps_part / (1.0 - rho)
    t_bps = (1.0 - st.rho_theta) / (1.0 - rho) * (tail + bps_part)
    return SojournBreakdown(st.theta, t_total, t_bps, first, "two-phase", st.rho_theta)


def laplace_values(model: TlpsModel, theta) -> np.ndarray:
    """``L_i``: Laplace transform of ``alpha'`` at each phase rate."""
    st = _as_stats(model, theta)
    op = operator_matrix(st)
    n = op.f.size
    l_star = solve(np.eye(n) - op.m_matrix, st.b_over_f * op.f0)
    return l_star + 1.0 / (st.delta_rho * st.rates)


def nphase_sojourn_linear(model: TlpsModel, theta) -> SojournBreakdown:
    st = _as_stats(model, theta)
    if st.degenerate:
        return _ps_limit(model, st, "linear")
    t_bps = float(st.tail_components @ laplace_values(model, st))
    first = _first_term(st)
    return SojournBreakdown(
        st.theta, first + t_bps / (1.0 - st.rho_theta), t_bps, first, "linear", st.rho_theta
    )


def series_cap(q: float, tol: float) -> int:
    if q <= 0:
        return 64
    return math.ceil(math.log(tol * (1.0 - q)) / math.log(q)) + 64


def nphase_sojourn_series(model: TlpsModel, theta, tol: float = 1e-12) -> SojournBreakdown:
    """Sum ``f @ M^i @ f0`` until the geometric tail bound drops below ``tol * S``.

    Successive terms shrink at least by the factor ``q``, so stopping once
    ``term <= tol * (1 - q) * S`` bounds the neglected remainder by ``tol * S``.
    """
    if not tol > 0:
        raise InvalidModelError("tol must be positive")
    st = _as_stats(model, theta)
    if st.degenerate:
        return _ps_limit(model, st, "series")
    first = _first_term(st)
    rho = model.rho
    base = first + st.tail_mean / (1.0 - rho)
    one_minus = 1.0 - st.rho_theta
    if st.b_over_f == 0.0:
        return SojournBreakdown(
            st.theta, base, st.tail_mean * one_minus / (1.0 - rho), first, "series", st.rho_theta,
            iterations=0,
        )
    op = operator_matrix(st)
    cap = series_cap(st.q, tol)
    v = op.f0
    total = float(op.f @ v)
    stop = tol * (1.0 - st.q)
    iterations = 0
    while True:
        v = op.m_matrix @ v
        term = float(op.f @ v)
        total += term
        iterations += 1
        if term <= stop * abs(total):
            break
        if iterations >= cap:
            raise ConvergenceError(
                f"operator series not converged after {iterations} terms (q={st.q:.6g})"
            )
    t_total = base + st.b_over_f * total / one_minus
    t_bps = st.tail_mean * one_minus / (1.0 - rho) + st.b_over_f * total
    return SojournBreakdown(
        st.theta, t_total, t_bps, first, "series", st.rho_theta, iterations=iterations
    )


def upper_bound(model: TlpsModel, theta) -> SojournBreakdown:
    st = _as_stats(model, theta)
    rho = model.rho
    fi, mu = st.tail_components, st.rates
    pair_sum = float(fi @ (1.0 / np.add.outer(mu, mu)) @ fi)
    first = _first_term(st)
    t_total = first + st.tail_mean / (1.0 - rho) + st.b_over_f * pair_sum / (1.0 - rho)
    t_bps = (1.0 - st.rho_theta) / (1.0 - rho) * (st.tail_mean + st.b_over_f * pair_sum)
    return SojournBreakdown(
        st.theta, t_total, t_bps, first, "bound", st.rho_theta, degenerate=st.degenerate
    )


_ROUTES = {
    "linear": nphase_sojourn_linear,
    "series": nphase_sojourn_series,
    "bound": upper_bound,
    "twophase": two_phase_sojourn,
    "two-phase": two_phase_sojourn,
}


def sojourn(model: TlpsModel, theta, method: str = "linear") -> SojournBreakdown:
    try:
        route = _ROUTES[method]
    except KeyError:
        raise InvalidModelError(f"unknown method {method!r}; choose from {sorted(_ROUTES)}") from None
    return route(model, theta)


def default_grid_step(model: TlpsModel, theta: float) -> float:
    return min(1.0 / float(np.max(model.dist.rates)), theta + 1.0) / 100.0


def volterra_alpha(
    model: TlpsModel,
    theta: float,
    x_max: float,
    grid_step: float | None = None,
    rtol: float = 1e-3,
    check: bool = True,
) -> VolterraSolution:
    """Solve for ``alpha'`` on ``[0, x_max]`` by trapezoidal marching.

    The infinite-range part of the integral equation collapses to
    ``gamma * sum_i F_i L_i exp(-mu_i x)`` once the Laplace values ``L_i`` are
    known, leaving a Volterra equation of the second kind whose kernel
    ``gamma * Fbar(x - y + theta)`` is a sum of exponentials.  The trapezoid
    convolution is then updated recursively per phase, O(N) per step.

    With ``check`` the result is validated by recomputing ``t_bps`` as
    ``int alpha'(y) Fbar(y + theta) dy`` and comparing with the linear solve.
    """
    if not x_max > 0:
        raise InvalidModelError("x_max must be positive")
    h = default_grid_step(model, theta) if grid_step is None else float(grid_step)
    if not h > 0:
        raise InvalidModelError("grid_step must be positive")
    st = truncated_stats(model, theta)
    fi, mu, gam = st.tail_components, st.rates, st.gamma
    lv = laplace_values(model, st) if not st.degenerate else 1.0 / (st.delta_rho * mu)

    n = max(int(math.ceil(x_max / h - 1e-9)), 1)
    x = np.arange(n + 1) * h
    decay = np.exp(-mu * h)
    # forcing term: infinite-range integral via L_i, plus (b / Fbar) Fbar(x + theta) + 1
    weights_g = gam * fi * lv + st.b_over_f * fi
    forcing = 1.0 + np.exp(-np.multiply.outer(x, mu)) @ weights_g

    gf = gam * fi
    diag = 1.0 - 0.5 * h * gf.sum()
    ap = np.empty(n + 1)
    ap[0] = forcing[0]
    conv = np.zeros_like(mu)
    half_h = 0.5 * h
    for k in range(1, n + 1):
        carried = decay * (conv + half_h * ap[k - 1])
        ap[k] = (forcing[k] + gf @ carried) / diag
        conv = carried + half_h * ap[k]

    alpha = np.concatenate(([0.0], np.cumsum(half_h * (ap[1:] + ap[:-1]))))
    t_bps = float(fi @ lv)

    kernel = np.exp(-np.multiply.outer(x, mu)) @ fi
    integrand = ap * kernel
    # beyond x_max alpha' is taken flat at its last value
    tail = ap[-1] * float(np.sum(fi * np.exp(-mu * x[-1]) / mu))
    quad = float(half_h * (integrand[1:] + integrand[:-1]).sum()) + tail
    defect = abs(quad - t_bps) / t_bps if t_bps > 0 else 0.0
    if check and defect > rtol:
        raise GridTooCoarseError(
            f"quadrature of alpha' misses t_bps by {defect:.2e} (> {rtol:g}); "
            f"reduce grid_step below {h:g} or extend x_max"
        )
    return VolterraSolution(
        grid=x, alpha_prime=ap, alpha=alpha, l_values=np.asarray(lv), t_bps=t_bps,
        t_bps_quadrature=quad, defect=defect,
    )


def conditional_sojourn(model: TlpsModel, theta: float, x, grid_step: float | None = None):
    """Mean sojourn time of a job of size ``x``.

    ``x <= theta`` is served entirely at high priority: ``x / (1 - rho_theta)``.
    Larger jobs add the wait for the high queue to drain and ``alpha(x - theta)``.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise InvalidModelError("job size must be >= 0")
    st = truncated_stats(model, theta)
    one_minus = 1.0 - st.rho_theta
    out = xs / one_minus
    upper = xs > theta
    if np.any(upper):
        sol = volterra_alpha(
            model, theta, float(xs.max() - theta), grid_step=grid_step, check=False
        )
        a = np.interp(xs[upper] - theta, sol.grid, sol.alpha)
        out = np.where(upper, 0.0, out)
        out[upper] = (st.w_bar + theta + a) / one_minus
    return float(out) if out.ndim == 0 else out
