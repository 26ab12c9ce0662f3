"""Probability metrics between discrete measures.

The Prohorov distance is computed through Strassen's coupling
characterisation: ``mu1[A] <= mu2[A^beta] + alpha`` for every Borel ``A`` iff
some coupling puts mass at least ``1 - alpha`` on pairs at distance
``<= beta``.  Feasibility of such a coupling is a bipartite max-flow problem.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .measures import DiscreteMeasure, GaugeFunction, cumulative, gauge_integral

FLOW_SLACK = 1e-12
_EPS_CAP = 1e-15
BRUTEFORCE_MAX_ATOMS = 12


@dataclass(frozen=True, eq=False)
class CouplingCertificate:
    joint: np.ndarray
    alpha: float
    beta: float

    def close_mass(self, mu1: DiscreteMeasure, mu2: DiscreteMeasure) -> float:
        return float(self.joint[pairwise_distances(mu1, mu2) <= self.beta].sum())

    def verify(self, mu1: DiscreteMeasure, mu2: DiscreteMeasure, tol: float = 1e-9) -> bool:
        rows_ok = np.allclose(self.joint.sum(axis=1), mu1.masses, rtol=0, atol=tol)
        cols_ok = np.allclose(self.joint.sum(axis=0), mu2.masses, rtol=0, atol=tol)
        return bool(rows_ok and cols_ok and self.close_mass(mu1, mu2) >= 1 - self.alpha - tol)


def pairwise_distances(mu1: DiscreteMeasure, mu2: DiscreteMeasure) -> np.ndarray:
    if mu1.dim != mu2.dim:
        raise ValueError("measures live in different dimensions")
    if mu1.dim == 1:
        return np.abs(mu1.points[:, None] - mu2.points[None, :])
    diff = mu1.atoms[:, None, :] - mu2.atoms[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def bipartite_max_flow(supply: np.ndarray, demand: np.ndarray, adjacent: np.ndarray) -> tuple[float, np.ndarray]:
    """Dinic's algorithm on source -> left -> right -> sink with float capacities.

    ``adjacent[i, j]`` marks an uncapacitated edge from left node i to right
    node j.  Returns the flow value and the left-right flow matrix.
    """
    m, k = adjacent.shape
    s, t = m + k, m + k + 1
    nodes = m + k + 2
    graph: list[list[int]] = [[] for _ in range(nodes)]
    head: list[int] = []
    cap: list[float] = []

    def add_edge(u, v, c):
        graph[u].append(len(head))
        head.append(v)
        cap.append(c)
        graph[v].append(len(head))
        head.append(u)
        cap.append(0.0)

    for i in range(m):
        add_edge(s, i, float(supply[i]))
    inner = []
    for i, j in zip(*np.nonzero(adjacent)):
        inner.append((i, j, len(head)))
        add_edge(i, m + j, math.inf)
    for j in range(k):
        add_edge(m + j, t, float(demand[j]))

    total = 0.0
    while True:
        level = [-1] * nodes
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in graph[u]:
                if cap[e] > _EPS_CAP and level[head[e]] < 0:
                    level[head[e]] = level[u] + 1
                    queue.append(head[e])
        if level[t] < 0:
            break
        it = [0] * nodes

        def push(u, f):
            if u == t:
                return f
            while it[u] < len(graph[u]):
                e = graph[u][it[u]]
                v = head[e]
                if cap[e] > _EPS_CAP and level[v] == level[u] + 1:
                    pushed = push(v, min(f, cap[e]))
                    if pushed > 0:
                        cap[e] -= pushed
                        cap[e ^ 1] += pushed
                        return pushed
                it[u] += 1
            return 0.0

        while True:
            f = push(s, math.inf)
            if f <= 0:
                break
            total += f

    flow = np.zeros((m, k))
    for i, j, e in inner:
        flow[i, j] = cap[e ^ 1]
    return total, flow


def _sweep_flow(x: np.ndarray, a: np.ndarray, y: np.ndarray, b: np.ndarray, beta: float, want_plan: bool = False):
    """Max flow for sorted 1-d atoms where i~j iff |x_i - y_j| <= beta.

    Neighbourhoods are index intervals whose endpoints move right with i, so
    filling each left atom from the leftmost right atom with spare capacity is
    optimal.
    """
    rem = b.astype(float).tolist()
    ys = y.tolist()
    k = len(ys)
    lo = 0
    total = 0.0
    plan = [] if want_plan else None
    for i, (xi, ai) in enumerate(zip(x.tolist(), a.tolist())):
        while lo < k and (rem[lo] <= 0.0 or (ys[lo] < xi and abs(xi - ys[lo]) > beta)):
            lo += 1
        need = ai
        j = lo
        while need > 0.0 and j < k and abs(xi - ys[j]) <= beta:
            take = rem[j] if rem[j] < need else need
            if take > 0.0:
                rem[j] -= take
                need -= take
                total += take
                if plan is not None:
                    plan.append((i, j, take))
            j += 1
    return total, plan


def _residual_fill(joint: np.ndarray, row: np.ndarray, col: np.ndarray) -> np.ndarray:
    """Complete a sub-coupling to exact marginals with the north-west corner rule."""
    r = np.maximum(row - joint.sum(axis=1), 0.0)
    c = np.maximum(col - joint.sum(axis=0), 0.0)
    i = j = 0
    while i < len(r) and j < len(c):
        take = min(r[i], c[j])
        joint[i, j] += take
        r[i] -= take
        c[j] -= take
        if r[i] <= _EPS_CAP:
            i += 1
        if j < len(c) and c[j] <= _EPS_CAP:
            j += 1
    return joint


def _max_flow(mu1: DiscreteMeasure, mu2: DiscreteMeasure, beta: float, method: str, want_plan: bool):
    if method == "auto":
        method = "sweep" if mu1.dim == 1 else "dinic"
    if method == "sweep":
        if mu1.dim != 1:
            raise ValueError("the sweep solver handles one-dimensional measures only")
        total, plan = _sweep_flow(mu1.points, mu1.masses, mu2.points, mu2.masses, beta, want_plan)
        if not want_plan:
            return total, None
        flow = np.zeros((mu1.size, mu2.size))
        for i, j, f in plan:
            flow[i, j] += f
        return total, flow
    if method == "dinic":
        return bipartite_max_flow(mu1.masses, mu2.masses, pairwise_distances(mu1, mu2) <= beta)
    raise ValueError(f"unknown flow method {method!r}")


def strassen_feasible(mu1: DiscreteMeasure, mu2: DiscreteMeasure, alpha: float, beta: float,
                      method: str = "auto", certificate: bool = True):
    """Decide whether a coupling puts mass >= 1 - alpha within distance beta.

    Returns ``(feasible, certificate)``; the certificate is ``None`` when the
    answer is negative or ``certificate=False``.
    """
    if mu1.dim != mu2.dim:
        raise ValueError("measures live in different dimensions")
    total, flow = _max_flow(mu1, mu2, beta, method, certificate)
    ok = total >= 1.0 - alpha - FLOW_SLACK
    if not (ok and certificate):
        return ok, None
    joint = _residual_fill(flow, mu1.masses, mu2.masses)
    return ok, CouplingCertificate(joint, alpha, beta)


def strassen_condition_holds(mu1: DiscreteMeasure, mu2: DiscreteMeasure, alpha: float, beta: float) -> bool:
    """Check mu1[A] <= mu2[A^beta] + alpha over every subset A of supp(mu1)."""
    if mu1.size > BRUTEFORCE_MAX_ATOMS:
        raise ValueError(f"subset enumeration limited to {BRUTEFORCE_MAX_ATOMS} atoms")
    close = pairwise_distances(mu1, mu2) <= beta
    for mask in range(1, 1 << mu1.size):
        members = [i for i in range(mu1.size) if mask >> i & 1]
        lhs = mu1.masses[members].sum()
        reach = close[members].any(axis=0)
        if lhs > mu2.masses[reach].sum() + alpha + FLOW_SLACK:
            return False
    return True


def prohorov(mu1: DiscreteMeasure, mu2: DiscreteMeasure, tol: float = 1e-9, method: str = "auto") -> float:
    """Prohorov distance by bisection over eps on Strassen feasibility."""
    if mu1.dim != mu2.dim:
        raise ValueError("measures live in different dimensions")

    def feasible(eps):
        return strassen_feasible(mu1, mu2, eps, eps, method=method, certificate=False)[0]

    if feasible(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(max(40, math.ceil(math.log2(1.0 / tol)) + 1)):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _subset_min_distances(dist: np.ndarray) -> np.ndarray:
    """Row ``mask`` holds min over i in mask of dist[i, :] (inf for the empty set)."""
    m, k = dist.shape
    out = np.full((1 << m, k), np.inf)
    for mask in range(1, 1 << m):
        low = (mask & -mask).bit_length() - 1
        out[mask] = np.minimum(out[mask & (mask - 1)], dist[low])
    return out


def prohorov_bruteforce(mu1: DiscreteMeasure, mu2: DiscreteMeasure) -> float:
    """Evaluate inf{eps : mu1[A] <= mu2[A^eps] + eps for all A} by enumeration.

    For a fixed A the right-hand side is a step function of eps with jumps at
    the distances from A to the atoms of mu2, so the smallest admissible eps
    is either a jump location or the level of a flat piece.
    """
    if mu1.size > BRUTEFORCE_MAX_ATOMS:
        raise ValueError(f"subset enumeration limited to {BRUTEFORCE_MAX_ATOMS} atoms")
    dist = pairwise_distances(mu1, mu2)
    mind = _subset_min_distances(dist)
    masks = np.arange(1 << mu1.size)
    bits = (masks[:, None] >> np.arange(mu1.size)[None, :]) & 1
    lhs = bits @ mu1.masses
    worst = 0.0
    for mask in range(1, 1 << mu1.size):
        order = np.argsort(mind[mask], kind="stable")
        jumps = mind[mask][order]
        reached = np.concatenate([[0.0], np.cumsum(mu2.masses[order])])
        # piece p covers [t_p, t_{p+1}) with reached mass reached[p]
        starts = np.concatenate([[0.0], jumps])
        ends = np.concatenate([jumps, [math.inf]])
        eps_a = 1.0
        for p in range(len(starts)):
            if ends[p] <= starts[p] and p < len(starts) - 1:
                continue
            level = lhs[mask] - reached[p]
            if level <= starts[p]:
                eps_a = starts[p]
                break
            if level < ends[p]:
                eps_a = level
                break
        worst = max(worst, min(eps_a, 1.0))
    return float(worst)


def wasserstein1(mu1: DiscreteMeasure, mu2: DiscreteMeasure) -> float:
    """Integral of |F1 - F2| over the merged atom grid (one-dimensional)."""
    if mu1.dim != 1 or mu2.dim != 1:
        raise ValueError("wasserstein1 is implemented for one-dimensional measures")
    grid = np.union1d(mu1.points, mu2.points)
    if len(grid) == 1:
        return 0.0
    F1 = _cdf_on(mu1, grid[:-1])
    F2 = _cdf_on(mu2, grid[:-1])
    return float(np.sum(np.abs(F1 - F2) * np.diff(grid)))


def _cdf_on(mu: DiscreteMeasure, xs: np.ndarray) -> np.ndarray:
    F = np.concatenate([[0.0], cumulative(mu)])
    return F[np.searchsorted(mu.points, xs, side="right")]


def psi_distance(mu1: DiscreteMeasure, mu2: DiscreteMeasure, psi: GaugeFunction,
                 tol: float = 1e-9, weak: float | None = None) -> float:
    """Prohorov distance plus the gap between the psi-integrals.

    ``weak`` may carry a precomputed Prohorov distance.
    """
    if weak is None:
        weak = prohorov(mu1, mu2, tol=tol)
    return weak + abs(gauge_integral(mu1, psi) - gauge_integral(mu2, psi))
