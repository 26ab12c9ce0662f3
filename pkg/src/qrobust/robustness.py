"""Monte-Carlo robustness diagnostics.

Sampling laws of estimators are approximated by the empirical law of R
seeded replications.  A robustness surface compares, for every (delta, n),
the sampling law under a perturbed model with the law under the base model
in the Prohorov metric.  All verdicts are relative to the explicit
contamination path and to the finite grids used.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import measures
from .estimators import Estimator
from .functionals import Functional
from .measures import DiscreteMeasure, GaugeFunction
from .metrics import prohorov, psi_distance
from .models import (IIDNonparametric, IIDParametric, InnovationLaw, LinearProcess, LinearProcessModel,
                     ModelSpec, ParametricFamily, fisher_info, innovation_from_dict, innovation_to_dict, score)
from .seeding import SeedSpec

ROUND_DECIMALS = 12
DEFAULT_IOR_GRID = tuple(k / 4 for k in range(17))
DEFAULT_DEPTH_EXPONENT = 56
PROBE_TOL = 1e-9


def _parallel_map(fn, items, threads: int = 1) -> list:
    # results come back in input order whatever the scheduling
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- sampling laws ---------------------------------------------------------

@dataclass(frozen=True)
class SamplingLaw:
    law: DiscreteMeasure
    n: int
    R: int
    seed: SeedSpec
    boundary_hits: int = 0
    fallback_runs: int = 0


def replicate(model: ModelSpec, estimator: Estimator, n: int, R: int, seed: SeedSpec,
              threads: int = 1) -> tuple[np.ndarray, int, int]:
    """Raw estimator outputs of R replications; replication r uses ``seed.spawn(r)``."""

    def one(r):
        child = seed.spawn(r)
        try:
            res = estimator.result(model.sample(n, child), seed=child.spawn(1))
        except Exception as exc:
            raise RuntimeError(f"replication {r} failed: {exc}") from exc
        return res.value, res.boundary, res.path != "exact"

    out = _parallel_map(one, range(R), threads)
    values = np.array([v for v, _, _ in out], dtype=float)
    return values, sum(b for _, b, _ in out), sum(f for _, _, f in out)


def sampling_law(model: ModelSpec, estimator: Estimator, n: int, R: int, seed: SeedSpec,
                 threads: int = 1) -> SamplingLaw:
    """Empirical law of the estimator over R independent replications."""
    if R < 2:
        raise ValueError("need R >= 2 replications")
    values, boundary, fallback = replicate(model, estimator, n, R, seed, threads)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise RuntimeError(f"replication {bad} produced a non-finite estimate")
    law = measures.empirical(np.round(values, ROUND_DECIMALS))
    return SamplingLaw(law, n, R, seed, boundary, fallback)


# --- contamination paths ---------------------------------------------------

class ContaminationPath:
    """Map delta in [0, delta_max] to a model; larger delta is clamped to delta_max."""

    kind: str
    delta_max: float

    def effective(self, delta: float) -> float:
        if delta < 0:
            raise ValueError("delta must be >= 0")
        return min(delta, self.delta_max)

    def model(self, delta: float) -> ModelSpec:
        return self._model(self.effective(delta))

    def _model(self, delta: float) -> ModelSpec:
        raise NotImplementedError


@dataclass(frozen=True)
class ParamShift(ContaminationPath):
    family: ParametricFamily
    direction: float = 1.0
    delta_max: float = math.inf
    kind: str = "param_shift"

    def _model(self, delta):
        return IIDParametric(self.family.with_theta(self.family.theta + self.direction * delta))

    def to_dict(self):
        return {"kind": self.kind, "family": self.family.kind, "theta": self.family.theta,
                "sigma2": self.family.sigma2, "direction": self.direction, "delta_max": _enc(self.delta_max)}


@dataclass(frozen=True)
class MixtureDirac(ContaminationPath):
    """(1 - delta) base + delta * dirac(c(delta)) with c constant or K / delta."""

    base: DiscreteMeasure
    c: float | None = None
    K: float | None = None
    delta_max: float = 1.0
    kind: str = "mixture_dirac"

    def __post_init__(self):
        if (self.c is None) == (self.K is None):
            raise ValueError("give exactly one of c (constant atom) or K (atom K / delta)")
        if not 0 <= self.delta_max <= 1:
            raise ValueError("mixture weight delta_max must lie in [0, 1]")

    def atom(self, delta: float) -> float:
        return self.c if self.c is not None else self.K / delta

    def _model(self, delta):
        if delta == 0:
            return IIDNonparametric(self.base)
        return IIDNonparametric(measures.mix(self.base, measures.dirac(self.atom(delta)), delta))

    def to_dict(self):
        out = {"kind": self.kind, "base": self.base.to_dict(), "delta_max": _enc(self.delta_max)}
        out.update({"c": self.c} if self.c is not None else {"K": self.K})
        return out


@dataclass(frozen=True)
class ARShift(ContaminationPath):
    """Shift the coefficient to a + delta and/or mix delta_c into the innovations."""

    a: float
    innovation: InnovationLaw
    shift_coefficient: bool = True
    contamination_atom: float | None = None
    delta_max: float = math.inf
    kind: str = "ar_shift"

    def _model(self, delta):
        a = self.a + delta if self.shift_coefficient else self.a
        law = self.innovation
        if self.contamination_atom is not None and delta > 0:
            law = law.contaminated(delta, self.contamination_atom)
        return LinearProcess(LinearProcessModel(a, law))

    def to_dict(self):
        out = {"kind": self.kind, "a": self.a, "innovation": innovation_to_dict(self.innovation),
               "shift_coefficient": self.shift_coefficient, "delta_max": _enc(self.delta_max)}
        if self.contamination_atom is not None:
            out["contamination_atom"] = self.contamination_atom
        return out


def _enc(x):
    return "inf" if x == math.inf else x


def _dec(x):
    return math.inf if x == "inf" else float(x)


def path_from_dict(d: dict) -> ContaminationPath:
    d = dict(d)
    kind = d.pop("kind")
    if "delta_max" in d:
        d["delta_max"] = _dec(d["delta_max"])
    if kind == "param_shift":
        fam = ParametricFamily(d.pop("family"), d.pop("theta"), d.pop("sigma2", 1.0))
        return ParamShift(fam, **d)
    if kind == "mixture_dirac":
        return MixtureDirac(DiscreteMeasure.from_dict(d.pop("base")), **d)
    if kind == "ar_shift":
        return ARShift(d.pop("a"), innovation_from_dict(d.pop("innovation")), **d)
    raise ValueError(f"unknown contamination path {kind!r}")


# --- robustness surfaces ---------------------------------------------------

ROLE_REFERENCE, ROLE_BASE, ROLE_SPARE, ROLE_PERTURBED = range(4)


def stream_id(n_idx: int, delta_idx: int, role: int) -> int:
    return (n_idx * 1024 + delta_idx) * 4 + role


@dataclass
class RobustnessSurface:
    delta_grid: list
    n_grid: list
    eps_hat: np.ndarray  # shape (len(delta_grid), len(n_grid))
    noise_floor: np.ndarray  # shape (len(n_grid),)
    R: int
    master_seed: int
    boundary_hits: int = 0
    fallback_runs: int = 0
    reference_mean: np.ndarray | None = None  # mean of the reference law per n

    def rows(self):
        for i, d in enumerate(self.delta_grid):
            for j, n in enumerate(self.n_grid):
                yield d, n, float(self.eps_hat[i, j]), float(self.noise_floor[j]), self.R, self.master_seed

    def to_csv(self) -> str:
        lines = ["delta,n,eps_hat,noise_floor,R,master_seed"]
        for d, n, e, nf, R, s in self.rows():
            lines.append(f"{d:.17g},{n},{e:.17g},{nf:.17g},{R},{s}")
        return "\n".join(lines) + "\n"


def robustness_surface(path: ContaminationPath, estimator: Estimator, delta_grid, n_grid, R: int,
                       seed: SeedSpec, threads: int = 1, tol: float = 1e-9) -> RobustnessSurface:
    """eps_hat(delta, n) = Prohorov(law at delta, reference law at 0).

    Per n three base-model laws are drawn: the reference (role 0), the base
    law (role 1) and, for every delta whose model differs from the base,
    a perturbed law (role 3).  The noise floor is Prohorov(base, reference),
    so eps_hat at delta = 0 is a noise-floor replicate by construction.
    """
    delta_grid = [float(d) for d in delta_grid]
    n_grid = [int(n) for n in n_grid]
    if not delta_grid or not n_grid:
        raise ValueError("grids must be nonempty")
    if 0.0 not in delta_grid:
        raise ValueError("delta grid must contain 0")
    if len(delta_grid) > 1024:
        raise ValueError("at most 1024 delta values")
    eps = np.zeros((len(delta_grid), len(n_grid)))
    nf = np.zeros(len(n_grid))
    ref_mean = np.zeros(len(n_grid))
    boundary = fallback = 0
    base_model = path.model(0.0)
    for j, n in enumerate(n_grid):
        ref = sampling_law(base_model, estimator, n, R, seed.spawn(stream_id(j, 0, ROLE_REFERENCE)), threads)
        base = sampling_law(base_model, estimator, n, R, seed.spawn(stream_id(j, 0, ROLE_BASE)), threads)
        nf[j] = prohorov(base.law, ref.law, tol)
        ref_mean[j] = measures.mean(ref.law)
        boundary += ref.boundary_hits + base.boundary_hits
        fallback += ref.fallback_runs + base.fallback_runs
        for i, d in enumerate(delta_grid):
            if path.effective(d) == 0.0:
                eps[i, j] = nf[j]
                continue
            law = sampling_law(path.model(d), estimator, n, R,
                               seed.spawn(stream_id(j, i, ROLE_PERTURBED)), threads)
            boundary += law.boundary_hits
            fallback += law.fallback_runs
            eps[i, j] = prohorov(law.law, ref.law, tol)
    return RobustnessSurface(delta_grid, n_grid, eps, nf, R, int(seed.master_seed), boundary, fallback, ref_mean)


@dataclass
class RobustnessVerdict:
    finite_sample_ok: dict
    asymptotic_ok: bool
    margin: float
    eps_target: float
    max_noise_floor: float
    delta_grid: list
    n_grid: list
    witness_delta: float | None = None
    witness_n_star: int | None = None
    label: str = ("grid-relative and path-relative: only the listed deltas, sample sizes "
                  "and contamination path were examined")

    def to_dict(self) -> dict:
        return {
            "finite_sample_ok": {str(k): v for k, v in self.finite_sample_ok.items()},
            "asymptotic_ok": self.asymptotic_ok,
            "margin_noise_floors": _enc(self.margin),
            "eps_target": self.eps_target,
            "max_noise_floor": self.max_noise_floor,
            "delta_grid": self.delta_grid,
            "n_grid": self.n_grid,
            "witness_delta": self.witness_delta,
            "witness_n_star": self.witness_n_star,
            "label": self.label,
        }


def classify(surface: RobustnessSurface, eps_target: float, n0=None) -> RobustnessVerdict:
    """Finite-sample and asymptotic verdicts on the grid.

    ``n0`` may be one sample size or a list; default is every grid n.
    ``margin`` is (eps_target - max noise floor) in units of the max noise floor.
    """
    max_nf = float(np.max(surface.noise_floor))
    if not eps_target > max_nf:
        raise ValueError(f"eps_target {eps_target} does not exceed the noise floor {max_nf}")
    margin = math.inf if max_nf == 0 else (eps_target - max_nf) / max_nf
    n_arr = np.asarray(surface.n_grid)
    ok = surface.eps_hat <= eps_target
    positive = [i for i, d in enumerate(surface.delta_grid) if d > 0]
    if n0 is None:
        n0s = list(surface.n_grid)
    else:
        n0s = list(n0) if np.ndim(n0) else [n0]
    finite = {}
    for m in n0s:
        cols = n_arr <= m
        finite[int(m)] = any(bool(np.all(ok[i, cols])) for i in positive)
    asym = False
    w_delta = w_n = None
    for i in positive:
        for j in range(len(n_arr)):
            if np.all(ok[i, j:]):
                if not asym or n_arr[j] < w_n:
                    asym, w_delta, w_n = True, surface.delta_grid[i], int(n_arr[j])
                break
    return RobustnessVerdict(finite, asym, margin, eps_target, max_nf, list(surface.delta_grid),
                             list(surface.n_grid), w_delta, w_n)


# --- uniform integrability, probes and the index of robustness ------------

def uniform_integrability_check(mus: list[DiscreteMeasure], psi: GaugeFunction, eps: float,
                                max_exponent: int = 64) -> float | None:
    """Smallest a = 2^k (k = 0..64) with sup_mu gauge_tail(mu, psi, a) <= eps, else None."""
    for k in range(max_exponent + 1):
        a = 2.0**k
        if max(measures.gauge_tail(mu, psi, a) for mu in mus) <= eps:
            return a
    return None


def adversarial_family(p: float, m: int) -> DiscreteMeasure:
    """Mass 1/m at m^(1/p), the rest at 0: the p-th absolute moment is 1 for every m."""
    if not p > 0 or m < 1:
        raise ValueError("need p > 0 and m >= 1")
    return measures.mix(measures.dirac(0.0), measures.dirac(m ** (1.0 / p)), 1.0 / m)


def probe_family(base: DiscreteMeasure, r: float, m: int) -> DiscreteMeasure:
    """Like ``adversarial_family`` but with ``base`` in place of the point mass at 0."""
    return measures.mix(base, measures.dirac(m ** (1.0 / r)), 1.0 / m)


@dataclass
class ProbeReport:
    distances: list
    gaps: list
    flag: bool
    tail_length: int


def _decreasing_to_zero(ds, resolution):
    # values at or below the metric resolution count as converged
    return all(b <= resolution or b < a for a, b in zip(ds, ds[1:]))


def discontinuity_flag(distances, gaps, resolution: float = PROBE_TOL) -> tuple[bool, int]:
    """Tail of length ceil(M/2): decreasing distances while every gap is >= 10x the final distance."""
    M = len(distances)
    t = math.ceil(M / 2)
    ds, gs = list(distances[M - t:]), list(gaps[M - t:])
    if not all(math.isfinite(d) for d in ds):
        return False, t
    floor = 10.0 * max(ds[-1], resolution)
    return _decreasing_to_zero(ds, resolution) and min(gs) >= floor, t


def continuity_probe(functional, sequence: list[DiscreteMeasure], limit: DiscreteMeasure,
                     psi: GaugeFunction, weak: list | None = None, tol: float = PROBE_TOL) -> ProbeReport:
    """Gauge distances and functional gaps along ``sequence`` towards ``limit``.

    ``weak`` optionally supplies precomputed Prohorov distances to the limit.
    """
    if not sequence:
        raise ValueError("empty measure sequence")
    t_lim = functional(limit)
    dists, gaps = [], []
    for k, mu in enumerate(sequence):
        w = None if weak is None else weak[k]
        dists.append(psi_distance(mu, limit, psi, tol, weak=w))
        with np.errstate(over="ignore", invalid="ignore"):
            gap = abs(functional(mu) - t_lim)
        gaps.append(math.inf if math.isnan(gap) else gap)
    flag, t = discontinuity_flag(dists, gaps, tol)
    return ProbeReport(dists, gaps, flag, t)


@dataclass
class IorResult:
    p_star: float | None
    ior: float
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"p_star": self.p_star, "ior": _enc(self.ior),
                "flags": {f"{q:g}": v for q, v in self.flags.items()}}


def ior_estimate(functional, probe_ps=DEFAULT_IOR_GRID, base: DiscreteMeasure | None = None,
                 depth_exponent: int = DEFAULT_DEPTH_EXPONENT, tol: float = PROBE_TOL) -> IorResult:
    """Index of robustness 1 / p*, p* the smallest grid gauge exponent without a flag.

    ``functional`` is a Functional or a callable p -> Functional.  For each
    gauge psi_q the probe library is the sequences probe_family(base, r, m),
    m = 2^0 .. 2^depth_exponent, for every positive grid exponent r; psi_q
    is flagged when any of them is.  Returns ior = 0 when no gauge passes and
    ior = inf when p* = 0.
    """
    qs = [float(q) for q in probe_ps]
    if qs != sorted(qs):
        raise ValueError("probe grid must be sorted ascending")
    base = measures.dirac(0.0) if base is None else base
    ms = [2**k for k in range(depth_exponent + 1)]
    rs = [q for q in qs if q > 0]
    seqs = {r: [probe_family(base, r, m) for m in ms] for r in rs}
    weak = {r: [prohorov(mu, base, tol) for mu in seqs[r]] for r in rs}
    flags = {}
    for q in qs:
        fn = functional(q) if callable(functional) and not isinstance(functional, Functional) else functional
        psi = GaugeFunction(q)
        flags[q] = any(continuity_probe(fn, seqs[r], base, psi, weak[r], tol).flag for r in rs)
    passing = [q for q in qs if not flags[q]]
    if not passing:
        return IorResult(None, 0.0, flags)
    p_star = passing[0]
    return IorResult(p_star, math.inf if p_star == 0 else 1.0 / p_star, flags)


# --- Fisher information and the information bound --------------------------

@dataclass
class CramerRaoReport:
    family: str
    theta: float
    n: int
    R: int
    variance: float
    bound: float
    ratio: float
    ratio_se: float
    mean: float
    mean_se: float
    boundary_hits: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def cramer_rao_check(family: ParametricFamily, theta: float, n: int, R: int, seed: SeedSpec,
                     threads: int = 1) -> CramerRaoReport:
    """Empirical MLE variance against 1 / (n I_1(theta)), with a Monte-Carlo standard error."""
    fam = family.with_theta(theta)
    est = Estimator("mle", family=fam.kind)
    values, boundary, _ = replicate(IIDParametric(fam), est, n, R, seed, threads)
    var = float(np.var(values, ddof=1))
    m4 = float(np.mean((values - values.mean()) ** 4))
    var_se = math.sqrt(max(m4 - var**2, 0.0) / R)
    bound = 1.0 / (n * fisher_info(fam))
    return CramerRaoReport(fam.kind, theta, n, R, var, bound, var / bound, var_se / bound,
                           float(values.mean()), math.sqrt(var / R), boundary)


def fisher_info_mc(family: ParametricFamily, R: int, seed: SeedSpec) -> tuple[float, float]:
    """Monte-Carlo estimate of E[score^2] and its standard error."""
    xs = family.sample(R, seed.rng())
    s2 = score(family, family.theta, xs) ** 2
    return float(s2.mean()), float(s2.std(ddof=1) / math.sqrt(R))
