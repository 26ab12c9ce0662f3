"""Estimators mapping a sample (x_1, ..., x_n) to a real number."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import functionals, measures
from .functionals import Functional
from .measures import DEFAULT_ATOM_CAP, AtomCapExceeded
from .models import FAMILIES, ParametricFamily
from .seeding import SeedSpec

MC_FALLBACK_SIZE = 100_000


@dataclass(frozen=True)
class EstimateResult:
    """Value plus a record of how it was obtained."""

    value: float
    boundary: bool = False
    path: str = "exact"


def plug_in(functional: Functional, xs) -> float:
    return functional(measures.empirical(xs))


def _boundary_range(kind):
    return {"bernoulli": (0.0, 1.0), "poisson": (0.0, np.inf),
            "exponential": (0.0, np.inf), "normal": (-np.inf, np.inf)}[kind]


def mle_result(family: ParametricFamily | str, xs) -> EstimateResult:
    kind = family if isinstance(family, str) else family.kind
    if kind not in FAMILIES:
        raise ValueError(f"unknown family {kind!r}")
    x = np.asarray(xs, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("mle needs a nonempty sample")
    if kind == "bernoulli" and not np.all((x == 0) | (x == 1)):
        raise ValueError("Bernoulli observations must be 0 or 1")
    if kind == "poisson" and not np.all((x >= 0) & (x == np.floor(x))):
        raise ValueError("Poisson observations must be nonnegative integers")
    if kind == "exponential" and np.any(x < 0):
        raise ValueError("exponential observations must be nonnegative")
    value = float(x.mean())
    lo, hi = _boundary_range(kind)
    return EstimateResult(value, boundary=value <= lo or value >= hi)


def mle(family: ParametricFamily | str, xs) -> float:
    """Closed-form maximum likelihood estimate (the sample mean for every family).

    Boundary values such as 0 for an all-zero Bernoulli sample are returned
    as they are and flagged in ``mle_result``.
    """
    return mle_result(family, xs).value


def yule_walker(xs) -> float:
    """Lag-one autocovariance over the sample second moment; 0 if the latter is 0."""
    x = np.asarray(xs, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("yule_walker needs n >= 2")
    den = np.dot(x, x) / n
    # literal > 0.0: denormal sums count as nonzero
    if not den > 0.0:
        return 0.0
    return float(np.dot(x[:-1], x[1:]) / (n - 1) / den)


def premium_result(xs, alpha: float, atom_cap: int = DEFAULT_ATOM_CAP,
                   mc_fallback_size: int = MC_FALLBACK_SIZE,
                   seed: SeedSpec | None = None) -> EstimateResult:
    x = np.asarray(xs, dtype=float)
    n = len(x)
    if n < 1:
        raise ValueError("premium estimator needs n >= 1")
    mu = measures.empirical(x)
    try:
        return EstimateResult(functionals.premium(mu, alpha, n, atom_cap))
    except AtomCapExceeded:
        pass
    rng = (seed or SeedSpec(0)).rng()
    sums = measures.sample(mu, n * mc_fallback_size, rng).reshape(mc_fallback_size, n).sum(axis=1)
    value = functionals.avar(measures.empirical(sums), alpha) / n
    return EstimateResult(value, path="monte_carlo")


def premium_estimator(xs, alpha: float, atom_cap: int = DEFAULT_ATOM_CAP,
                      mc_fallback_size: int = MC_FALLBACK_SIZE, seed: SeedSpec | None = None) -> float:
    """AVaR_alpha of the n-fold convolution of the empirical law, divided by n."""
    return premium_result(xs, alpha, atom_cap, mc_fallback_size, seed).value


@dataclass(frozen=True)
class Estimator:
    """Serializable estimator.  ``kind`` is plug_in, mle, yule_walker or premium."""

    kind: str
    functional: Functional | None = None
    family: str | None = None
    alpha: float | None = None
    atom_cap: int = DEFAULT_ATOM_CAP
    mc_fallback_size: int = MC_FALLBACK_SIZE

    def __post_init__(self):
        if self.kind == "plug_in" and self.functional is None:
            raise ValueError("plug_in estimator needs a functional")
        if self.kind == "mle" and self.family not in FAMILIES:
            raise ValueError(f"mle needs a family in {FAMILIES}")
        if self.kind == "premium" and not (self.alpha is not None and 0 < self.alpha < 1):
            raise ValueError("premium estimator needs alpha in (0, 1)")
        if self.kind not in ("plug_in", "mle", "yule_walker", "premium"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")

    def result(self, xs, seed: SeedSpec | None = None) -> EstimateResult:
        if self.kind == "plug_in":
            return EstimateResult(plug_in(self.functional, xs))
        if self.kind == "mle":
            return mle_result(self.family, xs)
        if self.kind == "yule_walker":
            return EstimateResult(yule_walker(xs))
        return premium_result(xs, self.alpha, self.atom_cap, self.mc_fallback_size, seed)

    def __call__(self, xs, seed: SeedSpec | None = None) -> float:
        return self.result(xs, seed).value

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "plug_in":
            out["functional"] = self.functional.to_dict()
        elif self.kind == "mle":
            out["family"] = self.family
        elif self.kind == "premium":
            out.update(alpha=self.alpha, atom_cap=self.atom_cap, mc_fallback_size=self.mc_fallback_size)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> Estimator:
        d = dict(d)
        if "functional" in d:
            d["functional"] = Functional.from_dict(d["functional"])
        return cls(**d)
