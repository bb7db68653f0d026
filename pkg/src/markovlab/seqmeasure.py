"""Sequential constructions of homomorphism measures.

A triangle-free pattern can be built one vertex at a time: each new vertex
attaches to its earlier neighbors through the star kernel

    psi_z(x) = pi[x] * prod_j W[z_j][x],

and multiplying the accumulated table by psi at every step reproduces the
homomorphism measure W^G * pi^V regardless of the insertion order.  The same
construction drives random tree maps (root ~ pi, children by the Markov
kernel eta[x]/pi[x]) and the Monte Carlo sampler on spheres, where "attach"
means "sample orthogonal to the images of the earlier neighbors".
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Union

import numpy as np

from .errors import BudgetError, ValidationError
from .graphs import Graph, Tree, cycle, is_triangle_free, star_decomposition
from .spaces import FiniteMarkovSpace, sphere_conditional_sample

__all__ = [
    "StarStep",
    "SeqMeasureTrace",
    "OrderIndependenceReport",
    "K22Report",
    "tree_distribution",
    "sequential_star_measure",
    "order_independence_report",
    "sphere_sequential_sample",
    "k22_order_experiment",
]

TABLE_BUDGET = 10 ** 6
MASS_TOL = 1e-14  # leaf tuples below this are recorded, never divided


def _validate_order(g: Graph, order: Sequence[int]) -> tuple:
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(g.vertex_count)):
        raise ValidationError("order must be a permutation of the vertices")
    return order


def _check_budget(n: int, k: int) -> None:
    if n ** k > TABLE_BUDGET:
        raise BudgetError(f"sequential table needs {n}^{k} cells; too many")


def _transition_matrix(s: FiniteMarkovSpace) -> np.ndarray:
    """P[x][y] = eta[x][y]/pi[x]: the Markov step kernel (rows sum to 1)."""
    if s.is_rational:
        P = np.empty((s.n, s.n), dtype=object)
        for x in range(s.n):
            for y in range(s.n):
                P[x, y] = s.eta[x, y] / s.pi[x]
        return P
    return np.asarray(s.eta) / np.asarray(s.pi)[:, None]


def _broadcast_to(table: np.ndarray, own_vars: Sequence[int],
                  target_vars: Sequence[int]) -> np.ndarray:
    """Reorder/reshape a factor's axes so it broadcasts over target_vars."""
    own = list(own_vars)
    perm = sorted(range(len(own)), key=lambda i: own[i])
    arranged = np.transpose(table, perm) if len(own) > 1 else table
    own_sorted = sorted(own)
    shape = [table.shape[0] if v in own_sorted else 1 for v in target_vars]
    return arranged.reshape(shape)


def tree_distribution(t: Tree, s: FiniteMarkovSpace, order: Sequence[int]) -> np.ndarray:
    """Law of the random homomorphism of a tree: root ~ pi, children by steps.

    Returns a dense probability table with axes in ascending vertex order;
    equal to the tree's homomorphism measure for every valid search order.
    """
    g = t.graph
    order = _validate_order(g, order)
    _check_budget(s.n, g.vertex_count)
    adjacency = g.adjacency()
    P = _transition_matrix(s)
    all_vars = list(range(g.vertex_count))
    if s.is_rational:
        table = np.empty((s.n,) * g.vertex_count, dtype=object)
        table[...] = Fraction(1)
    else:
        table = np.ones((s.n,) * g.vertex_count)
    root = order[0]
    table = table * _broadcast_to(np.asarray(s.pi), [root], all_vars)
    placed = {root}
    for v in order[1:]:
        earlier = adjacency[v] & placed
        if len(earlier) != 1:
            raise ValidationError(
                f"vertex {v} has {len(earlier)} earlier neighbors; a tree search "
                "order must attach each vertex to exactly one")
        (u,) = earlier
        table = table * _broadcast_to(P, [u, v], all_vars)
        placed.add(v)
    return table


# ---------------------------------------------------------------------------
# sequential star measures


@dataclass(frozen=True, eq=False)
class StarStep:
    """One attachment step: center joined to its earlier neighbors.

    ``psi`` has axes (attachment..., center); ``theta`` is the conditional
    kernel psi / s(z), set to zero on the recorded zero-mass leaf tuples.
    """

    center: int
    attachment: tuple
    psi: np.ndarray
    theta: np.ndarray
    zero_mass: tuple


@dataclass(frozen=True, eq=False)
class SeqMeasureTrace:
    order: tuple
    steps: tuple
    table: np.ndarray  # accumulated measure, axes in ascending vertex order
    mode: str

    def total_mass(self):
        return self.table.sum()


def _star_step(center: int, attachment: tuple, s: FiniteMarkovSpace, W) -> StarStep:
    k = len(attachment)
    if s.is_rational:
        psi = np.empty((s.n,) * (k + 1), dtype=object)
        psi[...] = Fraction(1)
        psi = psi * np.asarray(s.pi).reshape((1,) * k + (s.n,))
        for j in range(k):
            psi = psi * _axis_pair(W, j, k, k + 1)
        mass = psi.sum(axis=k) if k else None
        theta = np.empty_like(psi)
        zeros = []
        if k:
            for z in np.ndindex((s.n,) * k):
                m = mass[z]
                if m == 0:
                    zeros.append(z)
                    theta[z] = Fraction(0)
                else:
                    theta[z] = psi[z] / m
        else:
            theta[...] = psi  # root step: psi = pi is already a distribution
        return StarStep(center, attachment, psi, theta, tuple(zeros))
    psi = np.broadcast_to(np.asarray(s.pi), (s.n,) * (k + 1)).copy() \
        if k else np.asarray(s.pi).copy()
    for j in range(k):
        psi = psi * _axis_pair(np.asarray(W), j, k, k + 1)
    if k:
        mass = psi.sum(axis=k)
        safe = np.where(mass > MASS_TOL, mass, 1.0)
        theta = np.where((mass > MASS_TOL)[..., None], psi / safe[..., None], 0.0)
        zeros = tuple(map(tuple, np.argwhere(mass <= MASS_TOL)))
    else:
        theta = psi.copy()
        zeros = ()
    return StarStep(center, attachment, psi, theta, zeros)


def _axis_pair(W: np.ndarray, i: int, j: int, ndim: int) -> np.ndarray:
    """W placed on axes (i, j) of an ndim-dimensional broadcast."""
    shape = [1] * ndim
    shape[i] = W.shape[0]
    shape[j] = W.shape[1]
    return W.reshape(tuple(shape))


def sequential_star_measure(g: Graph, s: FiniteMarkovSpace,
                            order: Sequence[int]) -> SeqMeasureTrace:
    """Build the homomorphism measure of a triangle-free pattern star by star."""
    order = _validate_order(g, order)
    if not is_triangle_free(g):
        raise ValidationError("pattern contains a triangle; sequential star "
                              "construction requires a triangle-free graph")
    _check_budget(s.n, g.vertex_count)
    W = s.step_matrix()
    decomposition = star_decomposition(g, order)
    all_vars = list(range(g.vertex_count))
    if s.is_rational:
        table = np.empty((s.n,) * g.vertex_count, dtype=object)
        table[...] = Fraction(1)
    else:
        table = np.ones((s.n,) * g.vertex_count)
    steps = []
    for tree, attachment in zip(decomposition.trees, decomposition.attachments):
        center = tree.labels[0]
        step = _star_step(center, tuple(attachment), s, W)
        steps.append(step)
        table = table * _broadcast_to(step.psi, list(attachment) + [center], all_vars)
    return SeqMeasureTrace(order=order, steps=tuple(steps), table=table, mode=s.mode)


@dataclass(frozen=True)
class OrderIndependenceReport:
    max_deviation: float
    orders_tested: int
    orders: tuple = ()
    deviations: tuple = ()  # per-order max deviation from the first table


def order_independence_report(g: Graph, s: FiniteMarkovSpace, n_orders: int,
                              seed: int) -> OrderIndependenceReport:
    """Rebuild the measure under random insertion orders and compare tables."""
    rng = np.random.default_rng(seed)
    nv = g.vertex_count
    orders = [tuple(range(nv)), tuple(reversed(range(nv)))]
    orders += [tuple(int(x) for x in rng.permutation(nv)) for _ in range(n_orders)]
    with ThreadPoolExecutor(max_workers=min(8, len(orders))) as pool:
        tables = list(pool.map(
            lambda o: sequential_star_measure(g, s, o).table, orders))
    reference = tables[0]
    deviations = [0.0]
    for other in tables[1:]:
        diff = reference - other
        if s.is_rational:
            dev = float(max((abs(v) for v in diff.flat), default=Fraction(0)))
        else:
            dev = float(np.max(np.abs(diff))) if diff.size else 0.0
        deviations.append(dev)
    return OrderIndependenceReport(max_deviation=max(deviations[1:], default=0.0),
                                   orders_tested=len(orders),
                                   orders=tuple(orders),
                                   deviations=tuple(deviations))


# ---------------------------------------------------------------------------
# sphere Monte Carlo


def sphere_sequential_sample(g: Graph, d: int, order: Sequence[int],
                             seed) -> Optional[Dict[int, np.ndarray]]:
    """Map the pattern into S^(d-1) vertex by vertex.

    Each vertex is drawn uniformly from the subsphere orthogonal to the
    images of its earlier neighbors.  Returns None (degenerate) when those
    images span all of R^d at some step.
    """
    order = _validate_order(g, order)
    if not is_triangle_free(g):
        raise ValidationError("pattern contains a triangle; orthogonality "
                              "constraints need a triangle-free graph")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    adjacency = g.adjacency()
    images: Dict[int, np.ndarray] = {}
    for v in order:
        anchors = [images[u] for u in sorted(adjacency[v]) if u in images]
        point = sphere_conditional_sample(d, anchors, rng)
        if point is None:
            return None
        images[v] = point
    return images


@dataclass(frozen=True, eq=False)
class K22Report:
    """Distribution of <u1,u2> for the two insertion orders of K_{2,2} in S^2."""

    samples_a: np.ndarray
    samples_b: np.ndarray
    hist_order_a: np.ndarray
    hist_order_b: np.ndarray
    bin_edges: np.ndarray
    ks_vs_uniform: float
    mass_at_one: float


# K_{2,2} as the 4-cycle 0-1-2-3: left class {0, 2}, right class {1, 3}
_K22 = cycle(4)
_ORDER_A = (0, 2, 1, 3)  # both u's first: u2 unconstrained by u1
_ORDER_B = (0, 1, 3, 2)  # u's last: u2 anchored at both v's


def _ks_statistic_uniform(samples: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance to Uniform[-1, 1]."""
    xs = np.sort(samples)
    n = len(xs)
    cdf = (xs + 1.0) / 2.0
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))


def k22_order_experiment(d: int, n_samples: int, seed: int) -> K22Report:
    """Compare the law of <u1,u2> under the two K_{2,2} insertion orders.

    Supported only at d=3, where placing both v's first forces u2 onto the
    antipodal pair of u1; placing the u's first leaves <u1,u2> uniform.
    """
    if d != 3:
        raise ValidationError("the K_{2,2} degeneration experiment is specific "
                              "to d=3 (two anchors fill the orthogonal plane)")
    if n_samples < 10 ** 3:
        raise ValidationError("need at least 1000 samples for stable histograms")
    results = {}
    for order_id, order in ((0, _ORDER_A), (1, _ORDER_B)):
        inner = np.empty(n_samples)
        for index in range(n_samples):
            images = sphere_sequential_sample(
                _K22, 3, order, np.random.default_rng([seed, index, order_id]))
            # anchors never span R^3 along either order, so no degeneracy
            inner[index] = float(np.dot(images[0], images[2]))
        results[order_id] = inner
    edges = np.linspace(-1.0, 1.0, 41)  # bins of width 0.05
    # round-off can push a dot product of unit vectors a hair past +-1
    hist_a, _ = np.histogram(np.clip(results[0], -1.0, 1.0), bins=edges)
    hist_b, _ = np.histogram(np.clip(results[1], -1.0, 1.0), bins=edges)
    mass_at_one = float(np.mean(np.abs(results[1]) > 1.0 - 1e-6))
    return K22Report(
        samples_a=results[0],
        samples_b=results[1],
        hist_order_a=hist_a,
        hist_order_b=hist_b,
        bin_edges=edges,
        ks_vs_uniform=_ks_statistic_uniform(results[0]),
        mass_at_one=mass_at_one,
    )
