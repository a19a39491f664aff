"""Hyper-exponential job sizes and the threshold-truncated workload statistics.

A hyper-exponential distribution with ``N`` phases has complementary CDF

    Fbar(x) = sum_i p_i exp(-mu_i x).

All quantities that depend on the threshold ``theta`` (truncated moments,
the high-priority load, the waiting time for the high-priority queue to empty,
batch sizes of the low-priority queue) are bundled in :class:`TruncatedStats`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateThresholdError, InvalidModelError, UnstableModelError

WEIGHT_SUM_TOL = 1e-9


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class HyperExp:
    """Mixture of exponentials. Phase order is kept exactly as given."""

    weights: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        r = _frozen(self.rates)
        if w.ndim != 1 or r.ndim != 1 or w.size == 0 or w.size != r.size:
            raise InvalidModelError("weights and rates must be 1-d sequences of equal nonzero length")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(r))):
            raise InvalidModelError("weights and rates must be finite")
        if np.any(w < 0):
            raise InvalidModelError("weights must be nonnegative")
        if np.any(r <= 0):
            raise InvalidModelError("rates must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidModelError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", r)

    @property
    def n_phases(self) -> int:
        return self.weights.size

    @property
    def mean(self) -> float:
        return float(np.sum(self.weights / self.rates))

    @property
    def second_moment(self) -> float:
        return float(2.0 * np.sum(self.weights / self.rates**2))

    def ccdf(self, x):
        """P(X > x), vectorized over ``x``."""
        x = np.asarray(x, dtype=float)
        return np.exp(-np.multiply.outer(x, self.rates)) @ self.weights

    def cdf(self, x):
        return 1.0 - self.ccdf(x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.multiply.outer(x, self.rates)) @ (self.weights * self.rates)

    def __repr__(self):
        return f"HyperExp(weights={self.weights.tolist()!r}, rates={self.rates.tolist()!r})"


def make_hyperexp(weights, rates) -> HyperExp:
    """Validate and build a :class:`HyperExp`.

    Weights summing to 1 within ``1e-9`` are renormalized; a larger deviation
    is rejected rather than silently fixed.
    """
    w = np.array(weights, dtype=float)
    r = np.array(rates, dtype=float)
    if w.ndim != 1 or r.ndim != 1 or w.size == 0 or w.size != r.size:
        raise InvalidModelError(
            f"dimension mismatch: {w.size} weights vs {r.size} rates (need equal, >= 1)"
        )
    if np.any(w < 0):
        raise InvalidModelError("negative weight")
    if np.any(~(r > 0)):
        raise InvalidModelError("nonpositive rate")
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidModelError(f"weights sum to {total!r}; deviation from 1 exceeds {WEIGHT_SUM_TOL}")
    return HyperExp(w / total, r)


def heavy_tail_family(n_phases: int, gamma1: float, gamma2: float, mean: float) -> HyperExp:
    """Hyper-exponential approximation of a heavy tail.

    ``p_i = nu / i**gamma1`` and ``mu_i = eta / i**gamma2`` with ``nu`` and
    ``eta`` chosen so the weights sum to one and the mean equals ``mean``.
    For ``(gamma1 - 1)/2 < gamma2 < gamma1 - 1`` the mean stays finite while
    the second moment diverges as ``n_phases`` grows.
    """
    if n_phases < 1:
        raise InvalidModelError("n_phases must be >= 1")
    if not gamma1 > 1:
        raise InvalidModelError("gamma1 must exceed 1")
    if not (gamma1 - 1) / 2 < gamma2 < gamma1 - 1:
        raise InvalidModelError(
            f"gamma2={gamma2} outside the band ({(gamma1 - 1) / 2}, {gamma1 - 1})"
        )
    if not mean > 0:
        raise InvalidModelError("mean must be positive")
    i = np.arange(1, n_phases + 1, dtype=float)
    nu = 1.0 / np.sum(i**-gamma1)
    eta = nu / mean * np.sum(i ** (gamma2 - gamma1))
    return make_hyperexp(nu * i**-gamma1, eta / i**gamma2)


def family_scale(n_phases: int, gamma1: float, gamma2: float, mean: float) -> float:
    """The rate scale ``eta`` used by :func:`heavy_tail_family`."""
    i = np.arange(1, n_phases + 1, dtype=float)
    nu = 1.0 / np.sum(i**-gamma1)
    return float(nu / mean * np.sum(i ** (gamma2 - gamma1)))


def moments(dist: HyperExp) -> tuple[float, float]:
    """Return ``(m, d)``: ``m = sum p/mu`` and ``d = 2 sum p/mu**2``."""
    return dist.mean, dist.second_moment


@dataclass(frozen=True, eq=False)
class TlpsModel:
    """Poisson arrivals at ``arrival_rate`` with hyper-exponential sizes."""

    dist: HyperExp
    arrival_rate: float

    def __post_init__(self):
        lam = float(self.arrival_rate)
        if not lam > 0 or not math.isfinite(lam):
            raise InvalidModelError("arrival rate must be positive and finite")
        object.__setattr__(self, "arrival_rate", lam)
        if not self.rho < 1:
            raise UnstableModelError(f"load rho = {self.rho:.6g} is not below 1")

    @property
    def mean(self) -> float:
        return self.dist.mean

    @property
    def second_moment(self) -> float:
        return self.dist.second_moment

    @property
    def rho(self) -> float:
        return self.arrival_rate * self.dist.mean

    @classmethod
    def from_load(cls, dist: HyperExp, rho: float) -> TlpsModel:
        return cls(dist, rho / dist.mean)


@dataclass(frozen=True, eq=False)
class TruncatedStats:
    """Every threshold-dependent quantity of the TLPS model at one ``theta``.

    ``tail_mean`` is ``m - x1`` computed directly from the tail components so
    that it keeps full relative precision at large thresholds.
    """

    model: TlpsModel
    theta: float
    tail_components: np.ndarray
    ccdf_at_theta: float
    tail_mean: float
    x1: float
    x2: float
    rho_theta: float
    w_bar: float
    gamma: float
    delta_rho: float
    q: float
    mean_batch: float
    batch_extra: float
    b_over_f: float
    rates: np.ndarray = field(repr=False)

    @property
    def degenerate(self) -> bool:
        return self.ccdf_at_theta == 0.0


def truncated_stats(model: TlpsModel, theta: float) -> TruncatedStats:
    theta = float(theta)
    if not theta >= 0:
        raise InvalidModelError(f"threshold must be >= 0, got {theta!r}")
    p, mu = model.dist.weights, model.dist.rates
    lam, rho = model.arrival_rate, model.rho

    t = mu * theta
    tail = p * np.exp(-t)
    tail.flags.writeable = False
    ccdf = float(tail.sum())
    tail_mean = float(np.sum(tail / mu))

    # integrals of n y^(n-1) Fbar(y) over [0, theta], regrouped per phase
    x1 = float(np.sum(p / mu * -np.expm1(-t)))
    x2 = float(2.0 * np.sum(p / mu**2 * (-np.expm1(-t) - t * np.exp(-t))))

    rho_theta = lam * x1
    one_minus = 1.0 - rho_theta
    w_bar = lam * x2 / (2.0 * one_minus)
    gamma = lam / one_minus
    b_over_f = 2.0 * lam * (w_bar + theta) / one_minus
    return TruncatedStats(
        model=model,
        theta=theta,
        tail_components=tail,
        ccdf_at_theta=ccdf,
        tail_mean=tail_mean,
        x1=x1,
        x2=x2,
        rho_theta=rho_theta,
        w_bar=w_bar,
        gamma=gamma,
        delta_rho=(1.0 - rho) / one_minus,
        q=gamma * tail_mean,
        mean_batch=ccdf / one_minus,
        batch_extra=b_over_f * ccdf,
        b_over_f=b_over_f,
        rates=mu,
    )


def truncated_ccdf(stats: TruncatedStats, x):
    """``Fbar(theta + x) / Fbar(theta)``, the residual-size survival function."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise InvalidModelError("x must be >= 0")
    if stats.ccdf_at_theta == 0.0:
        raise DegenerateThresholdError(
            f"Fbar(theta) underflows at theta={stats.theta}; residual distribution undefined"
        )
    out = np.exp(-np.multiply.outer(x, stats.rates)) @ stats.tail_components / stats.ccdf_at_theta
    return float(out) if out.ndim == 0 else out


def sample_job_sizes(dist: HyperExp, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` job sizes: a phase by its weight, then an exponential at that rate."""
    phase = rng.choice(dist.n_phases, size=size, p=dist.weights)
    return rng.standard_exponential(size) / dist.rates[phase]


def sample_job_size(dist: HyperExp, rng: np.random.Generator) -> float:
    return float(sample_job_sizes(dist, rng, 1)[0])
