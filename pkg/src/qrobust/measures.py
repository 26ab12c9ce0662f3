"""Finitely supported probability measures on R^d.

A :class:`DiscreteMeasure` stores its atoms as an ``(k, d)`` array sorted
lexicographically, with strictly positive masses summing to one.  Atoms are
merged only on exact coordinate equality.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MASS_TOL = 1e-12
DEFAULT_ATOM_CAP = 10**6

# Dense lattice convolution is used only when the result fits in this many cells.
_MAX_LATTICE_CELLS = 2_000_000
_MAX_DYADIC_EXPONENT = 40


class AtomCapExceeded(RuntimeError):
    """A convolution would need more atom pairs than ``atom_cap`` allows."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _merge(atoms: np.ndarray, masses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort atoms lexicographically and sum the masses of identical rows."""
    if atoms.shape[1] == 1:
        uniq, inv = np.unique(atoms[:, 0], return_inverse=True)
        uniq = uniq[:, None]
    else:
        uniq, inv = np.unique(atoms, axis=0, return_inverse=True)
    summed = np.bincount(inv.ravel(), weights=masses, minlength=len(uniq))
    keep = summed > 0
    return uniq[keep], summed[keep]


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    atoms: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        masses = np.array(self.masses, dtype=float).ravel()
        if atoms.ndim != 2 or atoms.shape[0] == 0 or atoms.shape[1] == 0:
            raise ValueError("atoms must be a nonempty (k, d) array")
        if atoms.shape[0] != masses.shape[0]:
            raise ValueError("one mass per atom required")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atom coordinates must be finite")
        if not np.all(masses > 0):
            raise ValueError("masses must be strictly positive")
        if abs(masses.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {masses.sum()!r}, not 1")
        if atoms.shape[1] == 1 and np.all(atoms[1:, 0] > atoms[:-1, 0]):
            # already sorted and distinct: nothing to merge
            merged_atoms, merged_masses = atoms, masses
        else:
            merged_atoms, merged_masses = _merge(atoms, masses)
            if len(merged_atoms) != len(atoms):
                raise ValueError("atoms must be pairwise distinct")
        object.__setattr__(self, "atoms", _freeze(merged_atoms))
        object.__setattr__(self, "masses", _freeze(merged_masses))

    @classmethod
    def from_pairs(cls, atoms, masses) -> DiscreteMeasure:
        """Build a measure, merging duplicate atoms and dropping zero masses."""
        atoms = np.array(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        a, m = _merge(atoms, np.asarray(masses, dtype=float).ravel())
        return cls(a, m)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def points(self) -> np.ndarray:
        """Atom locations as a flat array (one-dimensional measures only)."""
        _require_1d(self)
        return self.atoms[:, 0]

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            self.atoms.shape == other.atoms.shape
            and np.array_equal(self.atoms, other.atoms)
            and np.array_equal(self.masses, other.masses)
        )

    def allclose(self, other: DiscreteMeasure, atol: float = 1e-12) -> bool:
        return (
            self.atoms.shape == other.atoms.shape
            and np.array_equal(self.atoms, other.atoms)
            and np.allclose(self.masses, other.masses, rtol=0, atol=atol)
        )

    def __repr__(self):
        if self.dim == 1 and self.size <= 8:
            body = ", ".join(f"{x:g}: {m:.6g}" for x, m in zip(self.points, self.masses))
            return f"DiscreteMeasure({{{body}}})"
        return f"DiscreteMeasure(dim={self.dim}, size={self.size})"

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [[float(c) for c in row] for row in self.atoms],
            "masses": [float(m) for m in self.masses],
        }

    def to_json(self) -> str:
        # repr(float) round-trips; %.17g is the fixed-width equivalent.
        atoms = ", ".join("[" + ", ".join(f"{c:.17g}" for c in row) + "]" for row in self.atoms)
        masses = ", ".join(f"{m:.17g}" for m in self.masses)
        return f'{{"dim": {self.dim}, "atoms": [{atoms}], "masses": [{masses}]}}'

    @classmethod
    def from_dict(cls, data: dict) -> DiscreteMeasure:
        atoms = np.array(data["atoms"], dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        if "dim" in data and atoms.shape[1] != int(data["dim"]):
            raise ValueError("declared dim does not match atom coordinates")
        return cls(atoms, data["masses"])

    @classmethod
    def from_json(cls, text: str) -> DiscreteMeasure:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GaugeFunction:
    """The gauge psi_p(x) = (1 + |x|)^p, with psi_0 identically one."""

    p: float

    def __post_init__(self):
        if not (self.p >= 0 and math.isfinite(self.p)):
            raise ValueError("gauge exponent p must be finite and >= 0")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        norm = np.abs(x) if x.ndim <= 1 else np.linalg.norm(x, axis=-1)
        if self.p == 0:
            return np.ones_like(norm)
        return (1.0 + norm) ** self.p

    def on_atoms(self, mu: DiscreteMeasure) -> np.ndarray:
        return self(np.linalg.norm(mu.atoms, axis=1))


def _require_1d(mu: DiscreteMeasure):
    if mu.dim != 1:
        raise ValueError(f"operation needs a one-dimensional measure, got dim={mu.dim}")


def _as_points(xs) -> np.ndarray:
    a = np.array(xs, dtype=float)
    if a.ndim == 0:
        a = a[None]
    if a.ndim == 1:
        a = a[:, None]
    return a


def empirical(xs: Sequence) -> DiscreteMeasure:
    """Empirical measure (1/n) sum_i delta_{x_i}; duplicates are merged."""
    pts = _as_points(xs)
    if pts.shape[0] == 0:
        raise ValueError("empirical measure of an empty sample")
    n = pts.shape[0]
    atoms, counts = _merge(pts, np.ones(n))
    return DiscreteMeasure(atoms, counts / n)


def dirac(x) -> DiscreteMeasure:
    """Point mass at a scalar or at a d-dimensional point."""
    return DiscreteMeasure(np.asarray(x, dtype=float).reshape(1, -1), [1.0])


def mix(mu1: DiscreteMeasure, mu2: DiscreteMeasure, t: float) -> DiscreteMeasure:
    """(1 - t) mu1 + t mu2."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {t}")
    if mu1.dim != mu2.dim:
        raise ValueError("cannot mix measures of different dimension")
    if t == 0.0:
        return mu1
    if t == 1.0:
        return mu2
    atoms = np.vstack([mu1.atoms, mu2.atoms])
    masses = np.concatenate([(1.0 - t) * mu1.masses, t * mu2.masses])
    return DiscreteMeasure.from_pairs(atoms, masses)


def shift(mu: DiscreteMeasure, c) -> DiscreteMeasure:
    return DiscreteMeasure.from_pairs(mu.atoms + np.asarray(c, dtype=float), mu.masses)


def scale(mu: DiscreteMeasure, c: float) -> DiscreteMeasure:
    if c == 0:
        return dirac(np.zeros(mu.dim))
    return DiscreteMeasure.from_pairs(mu.atoms * c, mu.masses)


def coarsen(mu: DiscreteMeasure, grid_width: float = 0.0) -> DiscreteMeasure:
    """Round atom coordinates to multiples of ``grid_width`` (0 disables)."""
    if grid_width < 0:
        raise ValueError("grid_width must be >= 0")
    if grid_width == 0:
        return mu
    return DiscreteMeasure.from_pairs(np.round(mu.atoms / grid_width) * grid_width, mu.masses)


def _dyadic_exponent(x: np.ndarray) -> int | None:
    """Smallest k with every x * 2**k an integer below 2**52, else None."""
    for k in range(_MAX_DYADIC_EXPONENT + 1):
        y = x * float(2**k)
        if np.all(np.abs(y) < 2.0**52) and np.all(np.floor(y) == y):
            return k
        if not np.all(np.abs(y) < 2.0**52):
            return None
    return None


class _Lattice:
    """Dense representation of a 1-d measure on the grid offset + j * 2**-k."""

    def __init__(self, weights: np.ndarray, offset: int, k: int):
        self.weights = weights
        self.offset = offset
        self.k = k

    @classmethod
    def from_measure(cls, mu: DiscreteMeasure, k: int) -> _Lattice:
        idx = (mu.points * float(2**k)).astype(np.int64)
        lo = int(idx[0])
        w = np.zeros(int(idx[-1]) - lo + 1)
        w[idx - lo] = mu.masses
        return cls(w, lo, k)

    def convolve(self, other: _Lattice) -> _Lattice:
        # Shift-and-add over the sparser operand keeps this exact and cheap.
        a, b = (self, other) if np.count_nonzero(self.weights) >= np.count_nonzero(other.weights) else (other, self)
        out = np.zeros(len(a.weights) + len(b.weights) - 1)
        for j in np.flatnonzero(b.weights):
            out[j : j + len(a.weights)] += b.weights[j] * a.weights
        return _Lattice(out, a.offset + b.offset, self.k)

    def to_measure(self) -> DiscreteMeasure:
        nz = np.flatnonzero(self.weights)
        pts = (nz + self.offset) / float(2**self.k)
        masses = self.weights[nz]
        return DiscreteMeasure(pts[:, None], masses / masses.sum())


def _common_lattice(*mus: DiscreteMeasure) -> int | None:
    return _dyadic_exponent(np.concatenate([m.points for m in mus]))


def _check_cap(size1: int, size2: int, atom_cap: int):
    if size1 * size2 > atom_cap:
        raise AtomCapExceeded(
            f"convolution needs {size1}*{size2} atom pairs, above atom_cap={atom_cap}"
        )


def _generic_convolve(mu1: DiscreteMeasure, mu2: DiscreteMeasure) -> DiscreteMeasure:
    sums = (mu1.points[:, None] + mu2.points[None, :]).ravel()
    prods = (mu1.masses[:, None] * mu2.masses[None, :]).ravel()
    atoms, masses = _merge(sums[:, None], prods)
    return DiscreteMeasure(atoms, masses / masses.sum())


def convolve(mu1: DiscreteMeasure, mu2: DiscreteMeasure, atom_cap: int = DEFAULT_ATOM_CAP) -> DiscreteMeasure:
    """Law of X + Y for independent X ~ mu1, Y ~ mu2 (one-dimensional)."""
    _require_1d(mu1)
    _require_1d(mu2)
    _check_cap(mu1.size, mu2.size, atom_cap)
    k = _common_lattice(mu1, mu2)
    if k is not None:
        span = (mu1.points[-1] - mu1.points[0] + mu2.points[-1] - mu2.points[0]) * 2.0**k
        if span < _MAX_LATTICE_CELLS:
            return _Lattice.from_measure(mu1, k).convolve(_Lattice.from_measure(mu2, k)).to_measure()
    return _generic_convolve(mu1, mu2)


def convolve_power(mu: DiscreteMeasure, n: int, atom_cap: int = DEFAULT_ATOM_CAP) -> DiscreteMeasure:
    """n-fold convolution mu * ... * mu."""
    if n < 1:
        raise ValueError("convolution power needs n >= 1")
    _require_1d(mu)
    if n == 1:
        return mu
    k = _common_lattice(mu)
    span = (mu.points[-1] - mu.points[0]) * n * 2.0**k if k is not None else math.inf
    if span < _MAX_LATTICE_CELLS:
        base = _Lattice.from_measure(mu, k)
        acc = base
        for _ in range(n - 1):
            _check_cap(np.count_nonzero(acc.weights), mu.size, atom_cap)
            acc = acc.convolve(base)
        return acc.to_measure()
    acc = mu
    for _ in range(n - 1):
        acc = convolve(acc, mu, atom_cap)
    return acc


def cdf(mu: DiscreteMeasure, x: float) -> float:
    """F(x) = mu((-inf, x]), right-continuous."""
    pts = mu.points
    j = np.searchsorted(pts, x, side="right")
    if j >= len(pts):
        return 1.0
    return float(min(1.0, mu.masses[:j].sum()))


def cumulative(mu: DiscreteMeasure) -> np.ndarray:
    """Distribution function evaluated at each atom, last value pinned to 1."""
    _require_1d(mu)
    F = np.cumsum(mu.masses)
    F[-1] = 1.0
    return np.minimum(F, 1.0)


def quantile(mu: DiscreteMeasure, q: float) -> float:
    """Lower quantile inf{x : F(x) >= q} for q in (0, 1]."""
    if not 0.0 < q <= 1.0:
        raise ValueError(f"quantile level must lie in (0, 1], got {q}")
    F = cumulative(mu)
    j = int(np.searchsorted(F, q, side="left"))
    return float(mu.points[min(j, mu.size - 1)])


def gauge_integral(mu: DiscreteMeasure, psi: GaugeFunction) -> float:
    return float(np.dot(mu.masses, psi.on_atoms(mu)))


def gauge_tail(mu: DiscreteMeasure, psi: GaugeFunction, a: float) -> float:
    """Integral of psi * 1{psi >= a} against mu."""
    vals = psi.on_atoms(mu)
    return float(np.dot(mu.masses, np.where(vals >= a, vals, 0.0)))


def mean(mu: DiscreteMeasure) -> float:
    _require_1d(mu)
    return float(np.dot(mu.masses, mu.points))


def sample(mu: DiscreteMeasure, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. atoms (rows) by inversion of the cumulative masses."""
    F = np.cumsum(mu.masses)
    idx = np.searchsorted(F, rng.random(n) * F[-1], side="right")
    idx = np.minimum(idx, mu.size - 1)
    out = mu.atoms[idx]
    return out[:, 0] if mu.dim == 1 else out
