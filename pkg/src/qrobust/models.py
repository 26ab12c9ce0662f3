"""Generative statistical models with seeded samplers.

Three model kinds are supported: i.i.d. draws from a dominated parametric
family, i.i.d. draws from a fixed discrete law, and the causal linear process
X_i = sum_k a^k Z_{i-k} driven by centred i.i.d. innovations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal, special, stats

from . import measures
from .measures import DiscreteMeasure
from .seeding import SeedSpec

FAMILIES = ("bernoulli", "poisson", "exponential", "normal")
BURN_IN_CAP = 100_000


@dataclass(frozen=True)
class ParametricFamily:
    """One member of a parametric family.

    ``exponential`` is parametrised by its mean: density exp(-x / theta) / theta.
    ``normal`` has mean theta and known variance ``sigma2``.
    """

    kind: str
    theta: float
    sigma2: float = 1.0

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown family {self.kind!r}")
        check_parameter(self.kind, self.theta)
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be > 0")

    def with_theta(self, theta: float) -> ParametricFamily:
        return replace(self, theta=theta)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        th = self.theta
        if self.kind == "bernoulli":
            return (rng.random(n) < th).astype(float)
        if self.kind == "poisson":
            return rng.poisson(th, n).astype(float)
        if self.kind == "exponential":
            return rng.exponential(th, n)
        return rng.normal(th, math.sqrt(self.sigma2), n)


def check_parameter(kind: str, theta: float):
    ok = {
        "bernoulli": 0.0 < theta < 1.0,
        "poisson": theta > 0.0,
        "exponential": theta > 0.0,
        "normal": math.isfinite(theta),
    }[kind]
    if not ok:
        raise ValueError(f"parameter {theta} outside the parameter range of {kind}")


def log_likelihood(family: ParametricFamily, theta: float, xs) -> float:
    """Sum of log L_1(x_i; theta) for i.i.d. observations."""
    check_parameter(family.kind, theta)
    x = np.asarray(xs, dtype=float)
    kind = family.kind
    if kind == "bernoulli":
        if not np.all((x == 0) | (x == 1)):
            raise ValueError("Bernoulli observations must be 0 or 1")
        k = x.sum()
        return float(k * math.log(theta) + (len(x) - k) * math.log1p(-theta))
    if kind == "poisson":
        if not np.all((x >= 0) & (x == np.floor(x))):
            raise ValueError("Poisson observations must be nonnegative integers")
        return float(np.sum(x * math.log(theta) - theta - special.gammaln(x + 1)))
    if kind == "exponential":
        if not np.all(x >= 0):
            raise ValueError("exponential observations must be nonnegative")
        return float(-len(x) * math.log(theta) - x.sum() / theta)
    s2 = family.sigma2
    return float(-0.5 * len(x) * math.log(2 * math.pi * s2) - np.sum((x - theta) ** 2) / (2 * s2))


def score(family: ParametricFamily, theta: float, xs) -> np.ndarray:
    """d/dtheta log L_1(x; theta), elementwise."""
    x = np.asarray(xs, dtype=float)
    if family.kind == "bernoulli":
        return x / theta - (1 - x) / (1 - theta)
    if family.kind == "poisson":
        return x / theta - 1.0
    if family.kind == "exponential":
        return (x - theta) / theta**2
    return (x - theta) / family.sigma2


def fisher_info(family: ParametricFamily, theta: float | None = None) -> float:
    """Per-observation Fisher information I_1(theta)."""
    th = family.theta if theta is None else theta
    check_parameter(family.kind, th)
    if family.kind == "bernoulli":
        return 1.0 / (th * (1.0 - th))
    if family.kind == "poisson":
        return 1.0 / th
    if family.kind == "exponential":
        return 1.0 / th**2
    return 1.0 / family.sigma2


def l1_density_distance(family: ParametricFamily, theta1: float, theta2: float) -> float:
    """Integral of |L_1(x; theta1) - L_1(x; theta2)| w.r.t. the dominating measure.

    Each family has a monotone likelihood ratio, so the densities cross once
    and the distance equals 2 |P1(X <= c) - P2(X <= c)| at the crossing c.
    """
    check_parameter(family.kind, theta1)
    check_parameter(family.kind, theta2)
    if theta1 == theta2:
        return 0.0
    lo, hi = sorted((theta1, theta2))
    kind = family.kind
    if kind == "bernoulli":
        return 2.0 * (hi - lo)
    if kind == "normal":
        sd = math.sqrt(family.sigma2)
        return 2.0 * (2.0 * stats.norm.cdf((hi - lo) / (2.0 * sd)) - 1.0)
    if kind == "exponential":
        c = lo * hi * math.log(hi / lo) / (hi - lo)
        return 2.0 * abs(math.exp(-c / lo) - math.exp(-c / hi))
    # poisson: p_lo(k) >= p_hi(k) iff k <= (hi - lo) / log(hi / lo)
    c = math.floor((hi - lo) / math.log(hi / lo))
    return 2.0 * abs(stats.poisson.cdf(c, lo) - stats.poisson.cdf(c, hi))


@dataclass(frozen=True)
class InnovationLaw:
    """Centred innovation law, optionally contaminated by a point mass.

    ``kind`` is ``normal`` (variance ``scale``), ``uniform`` (on
    [-scale, scale]) or ``discrete`` (``measure``, mean zero).  With
    ``contamination_weight = w > 0`` the law becomes
    (1 - w) base + w delta_c, shifted by -w c to keep mean zero.
    """

    kind: str
    scale: float = 1.0
    measure: DiscreteMeasure | None = None
    contamination_weight: float = 0.0
    contamination_atom: float = 0.0

    def __post_init__(self):
        if self.kind not in ("normal", "uniform", "discrete"):
            raise ValueError(f"unknown innovation kind {self.kind!r}")
        if self.kind == "discrete":
            if self.measure is None or self.measure.dim != 1:
                raise ValueError("discrete innovations need a one-dimensional measure")
            if abs(measures.mean(self.measure)) > 1e-12:
                raise ValueError("discrete innovation law must have mean zero")
            if self.second_moment() <= 0:
                raise ValueError("innovation variance must be > 0")
        elif not self.scale > 0:
            raise ValueError("innovation scale must be > 0")
        if not 0.0 <= self.contamination_weight < 1.0:
            raise ValueError("contamination weight must lie in [0, 1)")

    def base_variance(self) -> float:
        if self.kind == "normal":
            return self.scale
        if self.kind == "uniform":
            return self.scale**2 / 3.0
        return float(np.dot(self.measure.masses, self.measure.points**2))

    def second_moment(self) -> float:
        w, c = self.contamination_weight, self.contamination_atom
        if self.kind == "discrete" and self.measure is None:
            return 0.0
        # Var((1-w) base + w delta_c) for a centred base
        return (1 - w) * self.base_variance() + w * c * c - (w * c) ** 2

    @property
    def absolutely_continuous(self) -> bool:
        return self.kind != "discrete" and self.contamination_weight == 0.0

    def contaminated(self, weight: float, atom: float) -> InnovationLaw:
        return replace(self, contamination_weight=weight, contamination_atom=atom)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "normal":
            z = rng.normal(0.0, math.sqrt(self.scale), n)
        elif self.kind == "uniform":
            z = rng.uniform(-self.scale, self.scale, n)
        else:
            z = measures.sample(self.measure, n, rng)
        w = self.contamination_weight
        if w > 0:
            hit = rng.random(n) < w
            z = np.where(hit, self.contamination_atom, z) - w * self.contamination_atom
        return z

    @staticmethod
    def centered(mu: DiscreteMeasure) -> InnovationLaw:
        """Discrete innovation law obtained by recentring ``mu`` at zero."""
        c = measures.mean(mu)
        return InnovationLaw("discrete", measure=measures.shift(mu, -c))


def burn_in(a: float) -> int:
    """Number K of presample innovations so that the truncated tail is below 1e-12."""
    if a == 0:
        return 0
    k = math.ceil(math.log(1e-12 * (1 - abs(a))) / math.log(abs(a)))
    return min(max(k, 0), BURN_IN_CAP)


@dataclass(frozen=True)
class LinearProcessModel:
    a: float
    innovation: InnovationLaw

    def __post_init__(self):
        if not -1.0 < self.a < 1.0:
            raise ValueError("linear process coefficient must satisfy |a| < 1")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        K = burn_in(self.a)
        z = self.innovation.sample(K + n, rng)
        if self.a == 0:
            return z[K:]
        # X_t = a X_{t-1} + Z_t started from X = Z at time 1 - K
        x = signal.lfilter([1.0], [1.0, -self.a], z)
        return x[K:]


class ModelSpec:
    """Common interface: ``sample(n, seed)`` plus JSON round-tripping."""

    kind: str

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def sample(self, n: int, seed: SeedSpec) -> np.ndarray:
        if n < 1:
            raise ValueError("sample size must be >= 1")
        return self.draw(n, seed.rng())


@dataclass(frozen=True)
class IIDParametric(ModelSpec):
    family: ParametricFamily
    kind: str = "iid_parametric"

    def draw(self, n, rng):
        return self.family.sample(n, rng)


@dataclass(frozen=True)
class IIDNonparametric(ModelSpec):
    measure: DiscreteMeasure
    kind: str = "iid_nonparametric"

    def draw(self, n, rng):
        return measures.sample(self.measure, n, rng)


@dataclass(frozen=True)
class LinearProcess(ModelSpec):
    model: LinearProcessModel
    kind: str = "linear_process"

    def draw(self, n, rng):
        return self.model.sample(n, rng)


def sample(model: ModelSpec, n: int, seed: SeedSpec) -> np.ndarray:
    return model.sample(n, seed)


# JSON form: {"kind": ..., "params": {...}, "innovation": {...}}

def innovation_to_dict(law: InnovationLaw) -> dict:
    out = {"kind": law.kind}
    if law.kind == "discrete":
        out["measure"] = law.measure.to_dict()
    else:
        out["scale"] = law.scale
    if law.contamination_weight:
        out["contamination_weight"] = law.contamination_weight
        out["contamination_atom"] = law.contamination_atom
    return out


def innovation_from_dict(d: dict) -> InnovationLaw:
    d = dict(d)
    if "measure" in d:
        mu = DiscreteMeasure.from_dict(d.pop("measure"))
        if d.pop("recenter", False):
            mu = measures.shift(mu, -measures.mean(mu))
        d["measure"] = mu
    else:
        d.pop("recenter", None)
    return InnovationLaw(**d)


def model_to_dict(model: ModelSpec) -> dict:
    if isinstance(model, IIDParametric):
        f = model.family
        params = {"family": f.kind, "theta": f.theta}
        if f.kind == "normal":
            params["sigma2"] = f.sigma2
        return {"kind": model.kind, "params": params}
    if isinstance(model, IIDNonparametric):
        return {"kind": model.kind, "params": {"measure": model.measure.to_dict()}}
    if isinstance(model, LinearProcess):
        return {"kind": model.kind, "params": {"a": model.model.a},
                "innovation": innovation_to_dict(model.model.innovation)}
    raise TypeError(f"not a model: {model!r}")


def model_from_dict(d: dict) -> ModelSpec:
    kind = d["kind"]
    params = d.get("params", {})
    if kind == "iid_parametric":
        return IIDParametric(ParametricFamily(params["family"], params["theta"], params.get("sigma2", 1.0)))
    if kind == "iid_nonparametric":
        return IIDNonparametric(DiscreteMeasure.from_dict(params["measure"]))
    if kind == "linear_process":
        return LinearProcess(LinearProcessModel(params["a"], innovation_from_dict(d["innovation"])))
    raise ValueError(f"unknown model kind {kind!r}")
