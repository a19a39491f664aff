"""Threshold selection: grid + golden-section search, the two-phase
approximation of the optimal threshold, gain curves and the bound gap."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import nphase_sojourn_linear, ps_sojourn, sojourn, upper_bound
from .errors import InvalidModelError
from .hyperexp import TlpsModel, family_scale, heavy_tail_family, make_hyperexp

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TwoPhaseConstants:
    c1: float
    c2: float
    epsilon: float


@dataclass(frozen=True)
class ThresholdSearchResult:
    theta_opt: float
    t_at_opt: float
    grid: list
    gain_at_opt: float
    method_used: str
    at_boundary: bool = False


@dataclass(frozen=True)
class Table1Row:
    n_phases: int
    eta: float
    second_moment: float
    theta_opt: float
    max_gain: float
    max_delta: float
    theta_max_delta: float

    @property
    def half_second_moment(self) -> float:
        """``sum p_i / mu_i**2``, the quantity tabulated in the original study."""
        return self.second_moment / 2.0


def _two_phase_params(model: TlpsModel):
    if model.dist.n_phases != 2:
        raise InvalidModelError(f"needs a two-phase model, got N={model.dist.n_phases}")
    mu1, mu2 = (float(r) for r in model.dist.rates)
    if not mu1 > mu2:
        raise InvalidModelError("phases must be ordered fast first (mu1 > mu2)")
    m, lam, rho = model.mean, model.arrival_rate, model.rho
    if not m * mu1 > 1:
        raise InvalidModelError("needs m * mu1 > 1 (both phase weights positive)")
    return mu1, mu2, m, lam, rho


def two_phase_constants(model: TlpsModel) -> TwoPhaseConstants:
    mu1, mu2, m, lam, rho = _two_phase_params(model)
    c1 = lam * (m * mu1 - 1) / (mu1 * (mu1 - lam) * (1 - rho))
    c2 = lam * (m * mu1 - 1) / (mu1 - lam) ** 2
    return TwoPhaseConstants(c1, c2, mu2 / mu1)


def approx_threshold(model: TlpsModel) -> float:
    """Root of the approximate derivative: ``ln((mu1-lam) / (mu2 (1-rho))) / (mu1-mu2)``."""
    mu1, mu2, m, lam, rho = _two_phase_params(model)
    assert mu1 * rho > lam
    return math.log((mu1 - lam) / (mu2 * (1 - rho))) / (mu1 - mu2)


def approx_derivative(model: TlpsModel, theta: float) -> float:
    mu1, mu2, *_ = _two_phase_params(model)
    c = two_phase_constants(model)
    return -math.exp(-mu1 * theta) * mu1 * c.c1 + math.exp(-mu2 * theta) * mu2 * c.c2


def limit_sojourn(model: TlpsModel) -> float:
    """Common limit of ``T(theta_opt)`` and ``T(approx_threshold)`` as ``mu2/mu1 -> 0``."""
    return ps_sojourn(model) - two_phase_constants(model).c1


def epsilon_family(epsilon: float, mean: float = 20 / 11, mu1: float = 1.0,
                   rho: float = 10 / 11) -> TlpsModel:
    """Two-phase model with ``mu2 = epsilon * mu1`` and the given mean and load."""
    if not 0 < epsilon < 1:
        raise InvalidModelError("epsilon must lie in (0, 1)")
    if not 0 < rho < 1:
        raise InvalidModelError(f"load {rho} not in (0, 1)")
    p2 = epsilon * (mean * mu1 - 1) / (1 - epsilon)
    dist = make_hyperexp([1 - p2, p2], [mu1, epsilon * mu1])
    return TlpsModel(dist, rho / mean)


def golden_section(f, lo: float, hi: float, rel_width: float = 1e-6, max_iter: int = 200):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= rel_width * max(abs(a), abs(b), 1e-12):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _evaluate(fn, thetas, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, thetas))
    return [fn(t) for t in thetas]


def default_theta_max(model: TlpsModel) -> float:
    return 50.0 / float(np.min(model.dist.rates))


def optimize_threshold(
    model: TlpsModel,
    theta_min: float = 0.0,
    theta_max: float | None = None,
    grid_points: int = 241,
    method: str = "linear",
    workers: int | None = None,
) -> ThresholdSearchResult:
    """Grid scan of ``T(theta)`` followed by golden-section refinement."""
    if theta_max is None:
        theta_max = default_theta_max(model)
    if not 0 <= theta_min < theta_max:
        raise InvalidModelError("need 0 <= theta_min < theta_max")
    if grid_points < 8:
        raise InvalidModelError("grid_points must be >= 8")

    def objective(t):
        return sojourn(model, t, method).t_total

    thetas = np.linspace(theta_min, theta_max, grid_points)
    values = _evaluate(objective, thetas, workers)
    k = int(np.argmin(values))
    best_theta, best_t = float(thetas[k]), float(values[k])
    lo, hi = thetas[max(k - 1, 0)], thetas[min(k + 1, grid_points - 1)]
    x, fx = golden_section(objective, lo, hi)
    if fx < best_t:
        best_theta, best_t = float(x), float(fx)
    t_ps = ps_sojourn(model)
    # rounding can push a flat objective a hair above T_PS
    gain = max((t_ps - best_t) / t_ps, 0.0)
    return ThresholdSearchResult(
        theta_opt=best_theta,
        t_at_opt=best_t,
        grid=list(zip(thetas.tolist(), [float(v) for v in values])),
        gain_at_opt=gain,
        method_used=method,
        at_boundary=k in (0, grid_points - 1),
    )


def gain(model: TlpsModel, theta: float, method: str = "linear") -> float:
    t_ps = ps_sojourn(model)
    return (t_ps - sojourn(model, theta, method).t_total) / t_ps


_RULES = {"approx": 1.0, "three-halves-approx": 1.5, "half-approx": 0.5}


def gain_curve(rhos, theta_rule: str = "approx", epsilon: float = 0.1,
               mean: float = 20 / 11, mu1: float = 1.0) -> list[tuple[float, float]]:
    """Gain over PS along a load sweep of the two-phase family.

    ``mean``, ``mu1`` and ``epsilon`` stay fixed; the arrival rate is
    ``rho / mean``.  The threshold is the approximate optimum scaled by 1,
    3/2 or 1/2 according to ``theta_rule``.
    """
    try:
        factor = _RULES[theta_rule]
    except KeyError:
        raise InvalidModelError(f"unknown theta rule {theta_rule!r}") from None
    out = []
    for rho in rhos:
        model = epsilon_family(epsilon, mean=mean, mu1=mu1, rho=rho)
        theta = factor * approx_threshold(model)
        out.append((float(rho), gain(model, theta, "two-phase")))
    return out


def bound_gap(model: TlpsModel, theta: float) -> float:
    t = nphase_sojourn_linear(model, theta).t_total
    return (upper_bound(model, theta).t_total - t) / t


def bound_gap_curve(model: TlpsModel, thetas, workers: int | None = None):
    return list(zip([float(t) for t in thetas], _evaluate(lambda t: bound_gap(model, t), thetas, workers)))


def table1_row(
    n_phases: int,
    gamma1: float = 2.5,
    gamma2: float = 1.2,
    arrival_rate: float = 0.5,
    rho: float = 10 / 11,
    theta_max: float = 60.0,
    grid_points: int = 241,
    workers: int | None = None,
) -> Table1Row:
    """Optimal threshold, best gain and worst bound gap for one heavy-tail family."""
    mean = rho / arrival_rate
    model = TlpsModel(heavy_tail_family(n_phases, gamma1, gamma2, mean), arrival_rate)
    res = optimize_threshold(model, 0.0, theta_max, grid_points, workers=workers)
    thetas = np.array([g[0] for g in res.grid])
    t_lin = np.array([g[1] for g in res.grid])
    ub = np.array([upper_bound(model, t).t_total for t in thetas])
    delta = (ub - t_lin) / t_lin
    k = int(np.argmax(delta))
    lo, hi = thetas[max(k - 1, 0)], thetas[min(k + 1, thetas.size - 1)]
    x, neg = golden_section(lambda t: -bound_gap(model, t), lo, hi)
    theta_d, max_d = (float(x), -neg) if -neg > delta[k] else (float(thetas[k]), float(delta[k]))
    return Table1Row(
        n_phases=n_phases,
        eta=family_scale(n_phases, gamma1, gamma2, mean),
        second_moment=model.second_moment,
        theta_opt=res.theta_opt,
        max_gain=res.gain_at_opt,
        max_delta=max_d,
        theta_max_delta=theta_d,
    )
