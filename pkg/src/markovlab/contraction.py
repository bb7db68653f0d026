"""Variable-elimination engines for factored nonnegative measures.

A factor is a pair ``(vars, table)`` where ``vars`` is a tuple of distinct
integer variable ids and ``table`` assigns a weight to every tuple of atom
values.  Two engines share the bucket-elimination structure:

* dense (float64): tables are numpy arrays of shape ``(n,) * len(vars)``;
  each bucket is contracted by a single ``einsum`` call with pairwise
  optimization, so peak memory stays at ``n**w`` cells for induced width w;
* exact (Fraction): tables are sparse dicts mapping atom tuples to nonzero
  values, which keeps block-diagonal measures small.

Variables not listed in ``keep`` are summed out in the given order; the
result is a table over ``sorted(keep)``.
"""
from __future__ import annotations

import string
from fractions import Fraction
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from .errors import BudgetError, ValidationError

__all__ = [
    "CELL_BUDGET",
    "DenseFactor",
    "SparseFactor",
    "eliminate_dense",
    "eliminate_exact",
    "densify",
    "sparsify",
]

# Cap on the cell count of any intermediate table.  The bound is on n**w
# (w = live variables after summing the bucket); einsum's pairwise
# contraction never materializes more than that for our factor shapes.
CELL_BUDGET = 10 ** 8

DenseFactor = Tuple[Tuple[int, ...], np.ndarray]
SparseFactor = Tuple[Tuple[int, ...], Dict[Tuple[int, ...], Fraction]]

_LETTERS = string.ascii_letters


def _einsum_over(tables, scopes, out_vars) -> np.ndarray:
    all_vars = sorted({v for scope in scopes for v in scope} | set(out_vars))
    if len(all_vars) > len(_LETTERS):
        raise BudgetError(f"too many variables in one contraction ({len(all_vars)})")
    letter = {v: _LETTERS[i] for i, v in enumerate(all_vars)}
    lhs = ",".join("".join(letter[v] for v in scope) for scope in scopes)
    rhs = "".join(letter[v] for v in out_vars)
    return np.einsum(lhs + "->" + rhs, *tables, optimize=True)


def _check_cells(n: int, n_vars: int, budget: int) -> None:
    if n ** n_vars > budget:
        raise BudgetError(
            f"contraction would materialize {n}^{n_vars} cells (> {budget}); "
            "project the space to a coarser partition first")


def eliminate_dense(n: int, factors: Sequence[DenseFactor], order: Sequence[int],
                    keep: Sequence[int] = (), budget: int = CELL_BUDGET) -> np.ndarray:
    """Sum out every variable in `order` not in `keep`; return table over sorted(keep)."""
    keep_set = set(keep)
    work = [(tuple(vs), np.asarray(t)) for vs, t in factors]
    for vs, t in work:
        if t.shape != (n,) * len(vs):
            raise ValidationError(f"factor over {vs} has shape {t.shape}")
    for v in order:
        if v in keep_set:
            continue
        bucket = [f for f in work if v in f[0]]
        if not bucket:
            continue
        work = [f for f in work if v not in f[0]]
        union = sorted({u for vs, _ in bucket for u in vs})
        out_vars = tuple(u for u in union if u != v)
        _check_cells(n, len(out_vars), budget)
        work.append((out_vars, _einsum_over([t for _, t in bucket],
                                            [vs for vs, _ in bucket], out_vars)))
    out_vars = tuple(sorted(keep_set))
    _check_cells(n, len(out_vars), budget)
    if not work:
        return np.ones((n,) * len(out_vars))
    leftover = {u for vs, _ in work for u in vs} - keep_set
    if leftover:
        raise ValidationError(f"variables {sorted(leftover)} missing from order")
    return _einsum_over([t for _, t in work], [vs for vs, _ in work], out_vars)


# ---------------------------------------------------------------------------
# exact sparse engine


def _join_sparse(f1: SparseFactor, f2: SparseFactor, budget: int) -> SparseFactor:
    vars1, d1 = f1
    vars2, d2 = f2
    pos2 = {u: i for i, u in enumerate(vars2)}
    shared1 = [i for i, u in enumerate(vars1) if u in pos2]
    shared2 = [pos2[vars1[i]] for i in shared1]
    extra2 = [i for i, u in enumerate(vars2) if u not in set(vars1)]
    out_vars = vars1 + tuple(vars2[i] for i in extra2)
    index: Dict[Tuple[int, ...], list] = {}
    for key2, val2 in d2.items():
        index.setdefault(tuple(key2[i] for i in shared2), []).append((key2, val2))
    out: Dict[Tuple[int, ...], Fraction] = {}
    for key1, val1 in d1.items():
        for key2, val2 in index.get(tuple(key1[i] for i in shared1), ()):
            out[key1 + tuple(key2[i] for i in extra2)] = val1 * val2
    if len(out) > budget:
        raise BudgetError(f"sparse join grew to {len(out)} cells (> {budget})")
    return out_vars, out


def _sum_out_sparse(f: SparseFactor, v: int) -> SparseFactor:
    vars_, d = f
    i = vars_.index(v)
    out_vars = vars_[:i] + vars_[i + 1:]
    out: Dict[Tuple[int, ...], Fraction] = {}
    for key, val in d.items():
        short = key[:i] + key[i + 1:]
        out[short] = out.get(short, Fraction(0)) + val
    return out_vars, {k: val for k, val in out.items() if val != 0}


def _reorder_sparse(f: SparseFactor, out_vars: Tuple[int, ...]) -> SparseFactor:
    vars_, d = f
    if vars_ == out_vars:
        return f
    perm = [vars_.index(u) for u in out_vars]
    return out_vars, {tuple(key[i] for i in perm): val for key, val in d.items()}


def eliminate_exact(n: int, factors: Sequence[SparseFactor], order: Sequence[int],
                    keep: Sequence[int] = (), budget: int = CELL_BUDGET):
    """Exact-arithmetic analogue of eliminate_dense.

    Returns a sparse dict over ``sorted(keep)``, or a Fraction when keep is
    empty.
    """
    keep_set = set(keep)
    work: list[SparseFactor] = [(tuple(vs), dict(d)) for vs, d in factors]
    for v in order:
        if v in keep_set:
            continue
        bucket = [f for f in work if v in f[0]]
        if not bucket:
            continue
        work = [f for f in work if v not in f[0]]
        joined = bucket[0]
        for other in bucket[1:]:
            joined = _join_sparse(joined, other, budget)
        work.append(_sum_out_sparse(joined, v))
    out_vars = tuple(sorted(keep_set))
    if not work:
        result: SparseFactor = ((), {(): Fraction(1)})
    else:
        result = work[0]
        for other in work[1:]:
            result = _join_sparse(result, other, budget)
    leftover = set(result[0]) - keep_set
    if leftover:
        raise ValidationError(f"variables {sorted(leftover)} missing from order")
    result = _reorder_sparse(result, out_vars)
    if not keep_set:
        return result[1].get((), Fraction(0))
    return result[1]


def densify(n: int, n_vars: int, sparse: Mapping[Tuple[int, ...], Fraction]) -> np.ndarray:
    """Expand a sparse exact table into a dense object array (Fraction cells)."""
    out = np.empty((n,) * n_vars, dtype=object)
    out[...] = Fraction(0)
    for key, val in sparse.items():
        out[key] = val
    return out


def sparsify(table: np.ndarray, vars_: Tuple[int, ...]) -> SparseFactor:
    """Sparse view of a dense object-array factor (drops exact zeros)."""
    d: Dict[Tuple[int, ...], Fraction] = {}
    for key in np.ndindex(table.shape):
        val = table[key]
        if val != 0:
            d[key] = val
    return vars_, d
