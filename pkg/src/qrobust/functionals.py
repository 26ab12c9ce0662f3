"""Statistical functionals on one-dimensional discrete measures.

Atoms are read as losses (larger is worse).  VaR_s is the lower
(1 - s)-quantile and AVaR_alpha averages VaR_s over s in (0, alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import DEFAULT_ATOM_CAP, DiscreteMeasure, convolve_power, cumulative, quantile
from . import measures as _m

QUANTILE_AVERAGE = "quantile_average"
DISTRIBUTION_FORM = "distribution_form"


def _check_level(name, v):
    if not 0.0 < v < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {v}")


def mean(mu: DiscreteMeasure) -> float:
    return _m.mean(mu)


def abs_moment(mu: DiscreteMeasure, p: float) -> float:
    """Integral of |x|^p; may overflow to inf for far atoms."""
    if p <= 0:
        raise ValueError("moment order p must be > 0")
    with np.errstate(over="ignore"):
        return float(np.dot(mu.masses, np.abs(mu.points) ** p))


def var_level(mu: DiscreteMeasure, s: float) -> float:
    _check_level("VaR level s", s)
    return quantile(mu, 1.0 - s)


def _avar_quantile_average(x: np.ndarray, F: np.ndarray, alpha: float) -> float:
    # VaR_s = x_j for 1 - s in (F_{j-1}, F_j]; integrate over 1 - s in (1 - alpha, 1].
    Fprev = np.concatenate([[0.0], F[:-1]])
    width = np.clip(F, None, 1.0) - np.maximum(Fprev, 1.0 - alpha)
    width = np.maximum(width, 0.0)
    return float(np.dot(x, width) / alpha)


def _avar_distribution_form(x: np.ndarray, F: np.ndarray, alpha: float) -> float:
    def g(u):
        return np.maximum(u - (1.0 - alpha), 0.0) / alpha

    # F equals F_j on [x_j, x_{j+1}), 0 below x_0 and 1 from x_{k-1} on.
    left = np.concatenate([[-math.inf], x])
    right = np.concatenate([x, [math.inf]])
    level = np.concatenate([[0.0], F])
    gv = g(level)
    gv[-1] = 1.0
    neg_len = np.maximum(np.minimum(right, 0.0) - left, 0.0)
    pos_len = np.maximum(right - np.maximum(left, 0.0), 0.0)
    # the unbounded end pieces carry zero integrand; avoid inf * 0
    neg_len[0] = 0.0
    pos_len[-1] = 0.0
    return float(-np.dot(gv, neg_len) + np.dot(1.0 - gv, pos_len))


def avar(mu: DiscreteMeasure, alpha: float, method: str = QUANTILE_AVERAGE) -> float:
    """Average Value at Risk at level alpha, evaluated in closed form."""
    _check_level("AVaR level alpha", alpha)
    x = mu.points
    F = cumulative(mu)
    if method == QUANTILE_AVERAGE:
        return _avar_quantile_average(x, F, alpha)
    if method == DISTRIBUTION_FORM:
        return _avar_distribution_form(x, F, alpha)
    raise ValueError(f"unknown AVaR method {method!r}")


def premium(mu: DiscreteMeasure, alpha: float, n: int, atom_cap: int = DEFAULT_ATOM_CAP) -> float:
    """Per-risk premium AVaR_alpha(mu^{*n}) / n."""
    return avar(convolve_power(mu, n, atom_cap), alpha) / n


@dataclass(frozen=True)
class Functional:
    """A named functional; call it on a measure to evaluate."""

    kind: str
    p: float | None = None
    s: float | None = None
    alpha: float | None = None
    n: int | None = None
    atom_cap: int = DEFAULT_ATOM_CAP

    KINDS = ("mean", "abs_moment", "var", "avar", "premium")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind == "abs_moment" and not (self.p is not None and self.p > 0):
            raise ValueError("abs_moment needs p > 0")
        if self.kind == "var":
            _check_level("s", self.s if self.s is not None else -1)
        if self.kind in ("avar", "premium"):
            _check_level("alpha", self.alpha if self.alpha is not None else -1)
        if self.kind == "premium" and not (self.n is not None and self.n >= 1):
            raise ValueError("premium needs n >= 1")

    def __call__(self, mu: DiscreteMeasure) -> float:
        if self.kind == "mean":
            return mean(mu)
        if self.kind == "abs_moment":
            return abs_moment(mu, self.p)
        if self.kind == "var":
            return var_level(mu, self.s)
        if self.kind == "avar":
            return avar(mu, self.alpha)
        return premium(mu, self.alpha, self.n, self.atom_cap)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for key in ("p", "s", "alpha", "n"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> Functional:
        return cls(**d)
