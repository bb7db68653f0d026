"""Homomorphism densities and measures in finite Markov spaces.

The density of a pattern graph G in a space (eta, pi) is

    t(G) = sum over maps x: V(G) -> atoms of
           prod_{uv in E} W[x_u][x_v] * prod_v pi[x_v],

with W the step graphon of the space.  The same product, viewed as a measure
on atom tuples, is the homomorphism measure of G; its marginals, the star
tables s_k, the derived (k,p)-norms, the Finner product bound, and the
decreasing/Markov family checkers all live here.

Everything is computed by variable elimination (see `contraction`); rational
spaces get exact Fraction arithmetic.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .contraction import (
    CELL_BUDGET,
    densify,
    eliminate_dense,
    eliminate_exact,
    sparsify,
)
from .errors import BudgetError, MarkovLabError, ValidationError
from .graphs import Bigraph, Graph, chromatic_polynomial, elimination_order
from .spaces import FiniteMarkovSpace, space_to_float

__all__ = [
    "HomMeasure",
    "SkTable",
    "FinnerReport",
    "FamilyReport",
    "density",
    "density_batch",
    "normalized_density_finite_graph",
    "hom_measure",
    "marginal",
    "s_table",
    "kp_norm",
    "bigraph_density_via_s",
    "finner_check",
    "check_family",
    "MATERIALIZE_BUDGET",
    "MARGINAL_BUDGET",
    "SK_BUDGET",
]

MATERIALIZE_BUDGET = 10 ** 7
MARGINAL_BUDGET = 10 ** 6
SK_BUDGET = 10 ** 6
SUPPORT_TOL = 1e-14          # below this, float mass counts as zero
FACTORIZATION_TOL = 1e-10    # Markov-property residual threshold
CROSS_CHECK_TOL = 1e-10      # the two bigraph density formulas must agree

Number = Union[float, Fraction]


def _as_graph(g: Union[Graph, Bigraph]) -> Graph:
    return g.to_graph() if isinstance(g, Bigraph) else g


def _pattern_factors(g: Graph, s: FiniteMarkovSpace):
    """Vertex factors pi and edge factors W for the map-weight product."""
    W = s.step_matrix()
    if s.is_rational:
        pi_fs = [((v,), {(i,): s.pi[i] for i in range(s.n)}) for v in range(g.vertex_count)]
        edge_fs = [sparsify(W, e) for e in g.sorted_edges()]
        return pi_fs + edge_fs
    pi_fs = [((v,), np.asarray(s.pi)) for v in range(g.vertex_count)]
    edge_fs = [(e, W) for e in g.sorted_edges()]
    return pi_fs + edge_fs


def density(g: Union[Graph, Bigraph], s: FiniteMarkovSpace,
            normalized: bool = False) -> Number:
    """Homomorphism density t(G) of a pattern in a space.

    Bigraphs are evaluated on their underlying graph (finite spaces are
    symmetric, so the two-sided definition collapses).  The ``normalized``
    flag divides by t(K_2)^{|E|}; for a valid space t(K_2) is the total mass
    1, so this is a checked no-op.
    """
    graph = _as_graph(g)
    order, width = elimination_order(graph)
    if s.n ** width > CELL_BUDGET:
        raise BudgetError(
            f"induced width {width} at {s.n} atoms exceeds the contraction "
            "budget; project the space to a coarser partition first")
    factors = _pattern_factors(graph, s)
    if s.is_rational:
        value: Number = eliminate_exact(s.n, factors, order)
    else:
        value = float(eliminate_dense(s.n, factors, order))
    if normalized:
        edge_mass = s.eta.sum()  # literally t(K_2)
        if s.is_rational:
            if edge_mass != 1:
                raise ValidationError(f"t(K_2) = {edge_mass} != 1")
        elif abs(float(edge_mass) - 1.0) > 1e-12:
            raise ValidationError(f"t(K_2) = {float(edge_mass)!r} != 1")
        value = value / edge_mass ** graph.edge_count
    return value


def density_batch(patterns: Sequence[Union[Graph, Bigraph]], s: FiniteMarkovSpace,
                  normalized: bool = False,
                  max_workers: Optional[int] = None) -> list:
    """Evaluate many patterns against one space; evaluations are independent."""
    if not patterns:
        return []
    workers = max_workers or min(8, len(patterns))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: density(p, s, normalized=normalized), patterns))


# ---------------------------------------------------------------------------
# classical finite-graph normalization (products-of-complete-graphs route)


def _is_complete(h: Graph) -> bool:
    p = h.vertex_count
    return h.edge_count == p * (p - 1) // 2


def _hom_count(g: Graph, h: Graph) -> int:
    if _is_complete(h):
        # homomorphisms into K_p are exactly the proper p-colorings
        return chromatic_polynomial(g)(h.vertex_count)
    p, a = h.vertex_count, g.vertex_count
    if p ** a > MATERIALIZE_BUDGET:
        raise BudgetError(f"hom count needs {p}^{a} maps; too many")
    adjacency = h.adjacency()
    edges = list(g.edges)
    return sum(
        1
        for x in itertools.product(range(p), repeat=a)
        if all(x[v] in adjacency[x[u]] for u, v in edges)
    )


def normalized_density_finite_graph(g: Graph, h: Graph) -> Fraction:
    """Normalized density of g in a simple graph target h.

    Treats h as the uniform measure on its edges:
    t*(g, h) = hom(g, h) * p^(2b-a) / (2q)^b with p = |V(h)|, q = |E(h)|,
    a = |V(g)|, b = |E(g)|.  Exact rational output.
    """
    p, q = h.vertex_count, h.edge_count
    a, b = g.vertex_count, g.edge_count
    if p == 0:
        raise ValidationError("target graph has no vertices")
    if b == 0:
        return Fraction(1)  # hom = p^a exactly cancels the normalization
    if q == 0:
        raise ValidationError("target graph has no edges but the pattern does")
    return Fraction(_hom_count(g, h)) * Fraction(p) ** (2 * b - a) / Fraction(2 * q) ** b


# ---------------------------------------------------------------------------
# homomorphism measures


@dataclass(frozen=True, eq=False)
class HomMeasure:
    """Factored measure on atom tuples: weight(x) = prod W(x_u,x_v) prod pi(x_v)."""

    pattern: Graph
    space: FiniteMarkovSpace
    factors: tuple

    def total_mass(self) -> Number:
        """Equals density(pattern, space)."""
        order, _ = elimination_order(self.pattern)
        if self.space.is_rational:
            return eliminate_exact(self.space.n, self.factors, order)
        return float(eliminate_dense(self.space.n, self.factors, order))

    def materialize(self) -> np.ndarray:
        """Dense table over all of V (axes in vertex order)."""
        n, k = self.space.n, self.pattern.vertex_count
        if n ** k > MATERIALIZE_BUDGET:
            raise BudgetError(f"materializing needs {n}^{k} cells; too many")
        everything = tuple(range(k))
        if self.space.is_rational:
            sparse = eliminate_exact(n, self.factors, everything, keep=everything)
            return densify(n, k, sparse)
        return eliminate_dense(n, self.factors, everything, keep=everything)


def hom_measure(g: Graph, s: FiniteMarkovSpace) -> HomMeasure:
    return HomMeasure(pattern=g, space=s, factors=tuple(_pattern_factors(g, s)))


def marginal(m: HomMeasure, subset: Sequence[int]):
    """Marginal of a homomorphism measure on a vertex subset.

    Returns a dense table with axes in ascending vertex order; the empty
    subset gives the total mass as a scalar.
    """
    keep = tuple(sorted(set(subset)))
    if any(v < 0 or v >= m.pattern.vertex_count for v in keep):
        raise ValidationError(f"subset {keep} not within the pattern vertices")
    n = m.space.n
    if keep and n ** len(keep) > MARGINAL_BUDGET:
        raise BudgetError(f"marginal table of {n}^{len(keep)} cells; too many")
    order, _ = elimination_order(m.pattern)
    if m.space.is_rational:
        out = eliminate_exact(n, m.factors, order, keep=keep)
        if not keep:
            return out
        return densify(n, len(keep), out)
    out = eliminate_dense(n, m.factors, order, keep=keep)
    return float(out) if not keep else out


# ---------------------------------------------------------------------------
# star tables and (k,p)-norms


@dataclass(frozen=True, eq=False)
class SkTable:
    """s_k(y_1..y_k) = sum_x pi[x] prod_j W[x][y_j]: the k-star leaf density."""

    k: int
    n: int
    table: np.ndarray
    mode: str
    pi: np.ndarray

    def sigma(self) -> np.ndarray:
        """The measure form sigma_k = s_k * pi^k (sums to 1)."""
        out = self.table
        for axis in range(self.k):
            shape = [1] * self.k
            shape[axis] = self.n
            out = out * self.pi.reshape(shape)
        return out


def s_table(s: FiniteMarkovSpace, k: int) -> SkTable:
    if not (1 <= k <= 4):
        raise BudgetError(f"s_k tables are built for 1 <= k <= 4, got k={k}")
    if s.n ** k > SK_BUDGET:
        raise BudgetError(f"s_{k} table needs {s.n}^{k} cells; too many")
    W = s.step_matrix()
    if s.is_rational:
        table = np.empty((s.n,) * k, dtype=object)
        table[...] = Fraction(0)
        for x in range(s.n):
            term = W[x]
            for _ in range(k - 1):
                term = np.multiply.outer(term, W[x])
            table = table + term * s.pi[x]
    else:
        letters = "abcd"[:k]
        spec = "x," + ",".join(f"x{c}" for c in letters) + "->" + letters
        table = np.einsum(spec, s.pi, *([W] * k), optimize=True)
    return SkTable(k=k, n=s.n, table=table, mode=s.mode, pi=np.asarray(s.pi))


def kp_norm(s: FiniteMarkovSpace, k: int, p: int) -> float:
    """The (k,p)-norm: L^p norm of s_k under pi^k, then k-th root.

    Symmetric in (k, p): equals t(K_{k,p}, s)^(1/(kp)).
    """
    if p < 1:
        raise ValidationError("p must be a positive integer")
    tab = s_table(s, k)
    if s.is_rational:
        moment = Fraction(0)
        for key in itertools.product(range(s.n), repeat=k):
            weight = tab.table[key] ** p
            for v in key:
                weight *= s.pi[v]
            moment += weight
        return float(moment) ** (1.0 / (k * p))
    weighted = (tab.table ** p) * _pi_outer(np.asarray(s.pi), k)
    return float(weighted.sum()) ** (1.0 / (k * p))


def _pi_outer(pi: np.ndarray, k: int) -> np.ndarray:
    out = pi
    for _ in range(k - 1):
        out = np.multiply.outer(out, pi)
    return out


def bigraph_density_via_s(g: Bigraph, s: FiniteMarkovSpace) -> Number:
    """Bigraph density through the star tables.

    t = sum over left assignments x of pi^U(x) * prod_w s_{deg w}(x | N(w)),
    cross-checked against the direct contraction within 1e-10.
    """
    hoods = [tuple(nb) for nb in g.right_neighborhoods()]
    if any(len(nb) > 4 for nb in hoods):
        raise BudgetError("right-class degrees above 4 are outside the s_k budget")
    if g.left_count and s.n ** g.left_count > MARGINAL_BUDGET:
        raise BudgetError(
            f"left enumeration needs {s.n}^{g.left_count} cells; too many")
    tables = {deg: s_table(s, deg) for deg in sorted({len(nb) for nb in hoods}) if deg}
    if s.is_rational:
        factors = [((u,), {(i,): s.pi[i] for i in range(s.n)}) for u in range(g.left_count)]
        for nb in hoods:
            if nb:
                factors.append(sparsify(tables[len(nb)].table, nb))
        value: Number = eliminate_exact(s.n, factors, range(g.left_count))
        direct = density(g, s)
        if value != direct:
            raise MarkovLabError(
                f"bigraph density mismatch: {value} via s-tables, {direct} direct")
        return value
    factors = [((u,), np.asarray(s.pi)) for u in range(g.left_count)]
    for nb in hoods:
        if nb:
            factors.append((nb, tables[len(nb)].table))
    value = float(eliminate_dense(s.n, factors, range(g.left_count)))
    direct = float(density(g, s))
    scale = max(1.0, abs(direct))
    if abs(value - direct) > CROSS_CHECK_TOL * scale:
        raise MarkovLabError(
            f"bigraph density mismatch: {value!r} via s-tables, {direct!r} direct")
    return value


# ---------------------------------------------------------------------------
# Finner's product bound


@dataclass(frozen=True)
class FinnerReport:
    lhs: float
    rhs: float
    p: int
    holds: bool


def finner_check(s: FiniteMarkovSpace, factors, p: int) -> FinnerReport:
    """Check the product bound: integral of a product of nonnegative factors
    against pi^n is at most the product of their L^p norms, provided every
    variable appears in at most p factor scopes.
    """
    if p < 1:
        raise ValidationError("p must be a positive integer")
    sf = space_to_float(s)
    pi = np.asarray(sf.pi)
    clean = []
    multiplicity: dict[int, int] = {}
    for vars_, table in factors:
        vars_ = tuple(int(v) for v in vars_)
        if len(set(vars_)) != len(vars_):
            raise ValidationError(f"repeated variable in scope {vars_}")
        arr = np.asarray(table, dtype=float)
        if arr.shape != (sf.n,) * len(vars_):
            raise ValidationError(f"factor over {vars_} has shape {arr.shape}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValidationError("factors must be nonnegative and finite")
        for v in vars_:
            multiplicity[v] = multiplicity.get(v, 0) + 1
        clean.append((vars_, arr))
    over = {v: c for v, c in multiplicity.items() if c > p}
    if over:
        raise ValidationError(f"variables {sorted(over)} appear in more than p={p} scopes")
    variables = sorted(multiplicity)
    co_edges = {
        (min(u, v), max(u, v))
        for vars_, _ in clean
        for u, v in itertools.combinations(vars_, 2)
    }
    remap = {v: i for i, v in enumerate(variables)}
    co_graph = Graph.from_edges(len(variables),
                                {(remap[u], remap[v]) for u, v in co_edges})
    order = [variables[i] for i in elimination_order(co_graph)[0]]
    weighted = clean + [((v,), pi) for v in variables]
    lhs = float(eliminate_dense(sf.n, weighted, order))
    rhs = 1.0
    for vars_, arr in clean:
        mass = float(((arr ** p) * _pi_outer(pi, max(len(vars_), 1))).sum()) \
            if vars_ else float(arr ** p)
        rhs *= mass ** (1.0 / p)
    return FinnerReport(lhs=lhs, rhs=rhs, p=p, holds=lhs <= rhs + 1e-12)


# ---------------------------------------------------------------------------
# decreasing / Markov family checker


@dataclass(frozen=True)
class FamilyReport:
    decreasing_ok: bool
    markov_ok: bool
    max_residual: float


def _materialize_induced(g: Graph, s: FiniteMarkovSpace, subset: tuple) -> np.ndarray:
    """Dense measure of the induced pattern g[subset], axes in subset order."""
    relabel = {v: i for i, v in enumerate(subset)}
    k = len(subset)
    if k == 0:
        out = np.empty((), dtype=object if s.is_rational else float)
        out[()] = Fraction(1) if s.is_rational else 1.0
        return out
    W = s.step_matrix()
    if s.is_rational:
        factors = [((relabel[v],), {(i,): s.pi[i] for i in range(s.n)}) for v in subset]
        for u, v in g.edges:
            if u in relabel and v in relabel:
                factors.append(sparsify(W, (relabel[u], relabel[v])))
        sparse = eliminate_exact(s.n, factors, range(k), keep=range(k))
        return densify(s.n, k, sparse)
    factors = [((relabel[v],), np.asarray(s.pi)) for v in subset]
    for u, v in g.edges:
        if u in relabel and v in relabel:
            factors.append(((relabel[u], relabel[v]), W))
    return eliminate_dense(s.n, factors, range(k), keep=range(k))


def _support(table, rational: bool) -> np.ndarray:
    arr = np.asarray(table)
    if rational:
        # object arrays of Fractions: compare elementwise, land in real bools
        return np.greater(arr, 0).astype(bool)
    return arr > SUPPORT_TOL


def check_family(g: Graph, s: FiniteMarkovSpace) -> FamilyReport:
    """Verify that the induced-subgraph measures form a decreasing Markov family.

    decreasing: marginals of larger induced measures are supported inside
    smaller ones.  Markov: whenever V is covered by U and W with no edges
    between U-only and W-only vertices, the full measure is conditionally
    independent across S = U int W; max_residual is the worst entrywise
    factorization defect.
    """
    nverts = g.vertex_count
    if s.n ** nverts > MARGINAL_BUDGET:
        raise BudgetError(f"family check materializes {s.n}^{nverts} cells; too many")
    rational = s.is_rational
    vertices = tuple(range(nverts))
    measures: dict[tuple, np.ndarray] = {}
    for r in range(nverts + 1):
        for subset in itertools.combinations(vertices, r):
            measures[subset] = _materialize_induced(g, s, subset)

    decreasing_ok = True
    for t_set, mu_t in measures.items():
        for r in range(len(t_set) + 1):
            for s_set in itertools.combinations(t_set, r):
                drop = tuple(i for i, v in enumerate(t_set) if v not in s_set)
                marg = mu_t.sum(axis=drop) if drop else mu_t
                inside = _support(np.asarray(marg), rational)
                allowed = _support(measures[s_set], rational)
                if np.any(inside & ~allowed):
                    decreasing_ok = False

    mu_full = measures[vertices]
    adjacency = g.adjacency()
    max_residual = 0.0
    markov_ok = True
    for coloring in itertools.product((0, 1, 2), repeat=nverts):
        # 0 = U only, 1 = W only, 2 = separator S = U int W
        u_only = tuple(v for v in vertices if coloring[v] == 0)
        w_only = tuple(v for v in vertices if coloring[v] == 1)
        sep = tuple(v for v in vertices if coloring[v] == 2)
        if not u_only or not w_only:
            continue  # factorization is vacuous
        if any(b in adjacency[a] for a in u_only for b in w_only):
            continue  # not a valid (U, W) split
        rest = tuple(v for v in vertices if v not in sep)
        u_pos = tuple(rest.index(v) for v in u_only)
        w_pos = tuple(rest.index(v) for v in w_only)
        for assignment in itertools.product(range(s.n), repeat=len(sep)):
            idx: list = [slice(None)] * nverts
            for v, val in zip(sep, assignment):
                idx[v] = val
            block = mu_full[tuple(idx)]
            mass = block.sum()
            if (mass <= 0 if rational else float(mass) <= SUPPORT_TOL):
                continue
            cond = block / mass
            marg_u = cond.sum(axis=w_pos) if w_pos else cond
            marg_w = cond.sum(axis=u_pos) if u_pos else cond
            product = np.multiply.outer(marg_u, marg_w)
            # outer() puts U axes first; realign to the `rest` ordering
            axis_order = u_pos + w_pos
            product = np.transpose(product, np.argsort(axis_order))
            diff = cond - product
            if rational:
                worst = max((abs(v) for v in diff.flat), default=Fraction(0))
                worst = float(worst)
            else:
                worst = float(np.max(np.abs(diff))) if diff.size else 0.0
            max_residual = max(max_residual, worst)
    if max_residual > FACTORIZATION_TOL:
        markov_ok = False
    return FamilyReport(decreasing_ok=decreasing_ok, markov_ok=markov_ok,
                        max_residual=max_residual)
