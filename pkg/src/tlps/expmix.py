"""Exponential mixtures and the low-priority queue operators.

Functions of the form ``a0 + sum_k a_k exp(-b_k x)`` are closed under the
operators that act on the derivative of the low-priority response time.  Two
operators matter:

* ``Phi1(beta)(x) = gamma * int_0^inf beta(y) Fbar(x+y+theta) dy
                  + gamma * int_0^x beta(y) Fbar(x-y+theta) dy``
* ``Phi2(beta)    = int_0^inf beta(y) Fbar(y+theta) dy``

``Phi1`` is never built as a function of ``x``; only ``Phi2`` and the
composition ``Phi2(Phi1(.))`` are evaluated, both in closed form through
Laplace values at the phase rates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidModelError
from .hyperexp import TruncatedStats


@dataclass(frozen=True, eq=False)
class ExpMixture:
    constant: float = 0.0
    coefficients: np.ndarray = ()
    rates: np.ndarray = ()

    def __post_init__(self):
        a = np.array(self.coefficients, dtype=float).reshape(-1)
        b = np.array(self.rates, dtype=float).reshape(-1)
        if a.size != b.size:
            raise InvalidModelError("coefficients and rates differ in length")
        if np.any(~(b > 0)):
            raise InvalidModelError("mixture rates must be positive")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "rates", b)

    @classmethod
    def from_terms(cls, constant: float, terms) -> ExpMixture:
        terms = list(terms)
        return cls(constant, [t[0] for t in terms], [t[1] for t in terms])

    @property
    def terms(self) -> list[tuple[float, float]]:
        return list(zip(self.coefficients.tolist(), self.rates.tolist()))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.constant + np.exp(-np.multiply.outer(x, self.rates)) @ self.coefficients

    def is_nonnegative_coefficients(self) -> bool:
        return self.constant >= 0 and bool(np.all(self.coefficients >= 0))


def shifted_tail(stats: TruncatedStats) -> ExpMixture:
    """``Fbar(x + theta)`` as a mixture."""
    return ExpMixture(0.0, stats.tail_components, stats.rates)


def laplace_at(f: ExpMixture, s):
    """Laplace transform ``a0/s + sum a_k/(s + b_k)``, vectorized over ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise InvalidModelError("Laplace argument must be positive")
    out = f.constant / s + (1.0 / np.add.outer(s, f.rates)) @ f.coefficients
    return float(out) if out.ndim == 0 else out


def phi2(stats: TruncatedStats, f: ExpMixture) -> float:
    return float(stats.tail_components @ laplace_at(f, stats.rates))


def phi2_phi1(stats: TruncatedStats, f: ExpMixture) -> float:
    """``Phi2(Phi1(f)) = 2 gamma sum_ij Fi Fj f_hat(mu_j) / (mu_i + mu_j)``."""
    fi = stats.tail_components
    mu = stats.rates
    beta = laplace_at(f, mu)
    pair = fi[:, None] * fi[None, :] / np.add.outer(mu, mu)
    return float(2.0 * stats.gamma * np.sum(pair @ beta))


def phi1_const(stats: TruncatedStats, c: float) -> float:
    return c * stats.q


def lemma2_gap(stats: TruncatedStats, f: ExpMixture) -> float:
    """``q * Phi2(f) - Phi2(Phi1(f))``, nonnegative for nonnegative-coefficient mixtures.

    Nonnegative coefficients make ``s * f_hat(s)`` nondecreasing in ``s``, which
    is the sufficient condition for the contraction inequality.
    """
    if not f.is_nonnegative_coefficients():
        raise InvalidModelError("mixture needs nonnegative constant and coefficients")
    return stats.q * phi2(stats, f) - phi2_phi1(stats, f)


def pairwise_condition(stats: TruncatedStats, f: ExpMixture) -> np.ndarray:
    """Matrix of ``(beta_j mu_j - beta_i mu_i) (mu_j - mu_i)`` over phase pairs.

    Every entry is >= 0 when ``mu * beta(mu)`` is nondecreasing.
    """
    mu = stats.rates
    weighted = laplace_at(f, mu) * mu
    return np.subtract.outer(weighted, weighted) * np.subtract.outer(mu, mu)
