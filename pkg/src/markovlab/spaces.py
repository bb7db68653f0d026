"""Finite Markov spaces and their step graphons.

A finite Markov space is a symmetric nonnegative ``n x n`` matrix ``eta`` of
total mass 1 whose row sums ``pi`` (the stationary marginal) are all positive.
Two numeric modes are supported:

* ``"f64"`` — binary64 matrices (numpy), symmetric within 1e-12;
* ``"rational"`` — exact ``fractions.Fraction`` entries on numpy object
  arrays, capped at 64 atoms, for tests that demand exact identities.

The module also provides partitions and the projection (stepping) operator,
products, built-in graphon discretizations, and the sphere orthogonality
sampler.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import BudgetError, DegeneracyError, ParseError, ValidationError

__all__ = [
    "FiniteMarkovSpace",
    "StepGraphon",
    "Partition",
    "RefinementSequence",
    "SphereSpace",
    "space_from_matrix",
    "space_from_json",
    "space_to_json",
    "space_to_float",
    "step_graphon",
    "project",
    "quotient_space",
    "product_space",
    "discretize_graphon",
    "complete_graph_space",
    "adjacency_form",
    "sphere_conditional_sample",
    "random_space",
    "random_partition",
    "interval_partition",
    "GRAPHON_SPECS",
]

SYMMETRY_TOL = 1e-12
MASS_TOL = 1e-12
REGULARITY_TOL = 1e-10
RATIONAL_ATOM_CAP = 64

Scalar = Union[float, Fraction]


def _is_rational_mode(mode: str) -> bool:
    if mode not in ("f64", "rational"):
        raise ValidationError(f"unknown numeric mode {mode!r}")
    return mode == "rational"


def _parse_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational literal {value!r}") from exc
    if isinstance(value, float):
        # floats are accepted only when exact (e.g. 0.5); silent rounding of
        # inexact decimals would defeat the point of the mode
        frac = Fraction(value)
        if float(frac) != value:  # pragma: no cover - Fraction(float) is exact
            raise ValidationError(f"non-exact float {value} in rational mode")
        return frac
    raise ValidationError(f"cannot interpret {value!r} as a rational")


def _coerce_matrix(m, mode: str) -> np.ndarray:
    if _is_rational_mode(mode):
        rows = [list(r) for r in m]
        n = len(rows)
        out = np.empty((n, n), dtype=object)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise ValidationError("matrix is not square")
            for j, v in enumerate(row):
                out[i, j] = _parse_rational(v)
        return out
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError("matrix is not square")
    return arr


@dataclass(frozen=True, eq=False)
class FiniteMarkovSpace:
    """Symmetric edge-mass matrix with unit total mass and positive marginals."""

    n: int
    eta: np.ndarray
    pi: np.ndarray
    mode: str

    @property
    def is_rational(self) -> bool:
        return self.mode == "rational"

    def step_matrix(self) -> np.ndarray:
        """W[i][j] = eta[i][j] / (pi[i] * pi[j]); symmetric and 1-regular."""
        if self.is_rational:
            W = np.empty((self.n, self.n), dtype=object)
            for i in range(self.n):
                for j in range(self.n):
                    W[i, j] = self.eta[i, j] / (self.pi[i] * self.pi[j])
            return W
        return self.eta / np.outer(self.pi, self.pi)

    def total_mass(self) -> Scalar:
        return self.eta.sum()

    def to_float(self) -> "FiniteMarkovSpace":
        return space_to_float(self)


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """A space together with its step-graphon matrix W = d eta / d pi^2."""

    space: FiniteMarkovSpace
    W: np.ndarray


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _build_space(eta: np.ndarray, mode: str,
                 pi: Optional[np.ndarray] = None) -> FiniteMarkovSpace:
    """Validate invariants and assemble a space.

    When ``pi`` is given it is taken as the canonical marginal (used by
    operators that preserve marginals exactly in exact arithmetic, so float
    row-sum drift does not accumulate); it is still checked against the row
    sums.
    """
    n = eta.shape[0]
    rational = _is_rational_mode(mode)
    if rational and n > RATIONAL_ATOM_CAP:
        raise BudgetError(f"rational mode is capped at {RATIONAL_ATOM_CAP} atoms, got {n}")
    if rational:
        for i in range(n):
            for j in range(i, n):
                if eta[i, j] != eta[j, i]:
                    raise ValidationError(f"eta not symmetric at ({i},{j})")
                if eta[i, j] < 0:
                    raise ValidationError(f"negative mass at ({i},{j})")
        total = eta.sum()
        if total != 1:
            raise ValidationError(f"total mass {total} != 1")
        row = eta.sum(axis=1)
        if pi is None:
            pi = row
        elif any(pi[i] != row[i] for i in range(n)):
            raise ValidationError("pi does not match row sums")
        for i in range(n):
            if pi[i] <= 0:
                raise DegeneracyError(f"atom {i} has zero marginal mass")
    else:
        if not np.all(np.isfinite(eta)):
            raise ValidationError("eta has non-finite entries")
        asym = float(np.max(np.abs(eta - eta.T))) if n else 0.0
        if asym > SYMMETRY_TOL:
            raise ValidationError(f"eta not symmetric (max deviation {asym:.3e})")
        if np.any(eta < 0):
            raise ValidationError("eta has negative entries")
        total = float(eta.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValidationError(f"total mass {total!r} != 1")
        row = eta.sum(axis=1)
        if pi is None:
            pi = row
        elif float(np.max(np.abs(pi - row))) > MASS_TOL:
            raise ValidationError("pi does not match row sums")
        if np.any(pi <= 0):
            i = int(np.argmin(pi))
            raise DegeneracyError(f"atom {i} has zero marginal mass")
    return FiniteMarkovSpace(n=n, eta=_freeze(eta), pi=_freeze(np.array(pi)), mode=mode)


def space_from_matrix(m, normalize: bool = False, mode: str = "f64") -> FiniteMarkovSpace:
    """Build a space from a symmetric nonnegative matrix.

    With ``normalize=True`` the matrix is scaled by its total mass first
    (exactly in rational mode).
    """
    eta = _coerce_matrix(m, mode)
    n = eta.shape[0]
    if n == 0:
        raise ValidationError("empty matrix")
    if normalize:
        total = eta.sum()
        if _is_rational_mode(mode):
            if total <= 0:
                raise ValidationError("total mass must be positive")
            eta = np.array([[eta[i, j] / total for j in range(n)] for i in range(n)],
                           dtype=object)
        else:
            total = float(total)
            if not total > 0:
                raise ValidationError("total mass must be positive")
            eta = eta / total
    return _build_space(eta, mode)


def space_to_float(s: FiniteMarkovSpace) -> FiniteMarkovSpace:
    if not s.is_rational:
        return s
    eta = np.array([[float(s.eta[i, j]) for j in range(s.n)] for i in range(s.n)])
    return _build_space(eta / eta.sum(), "f64")


def step_graphon(s: FiniteMarkovSpace) -> StepGraphon:
    W = s.step_matrix()
    if not s.is_rational:
        reg = np.abs(W @ s.pi - 1.0)
        worst = float(reg.max()) if s.n else 0.0
        if worst > REGULARITY_TOL:
            raise ValidationError(f"step graphon not 1-regular (deviation {worst:.3e})")
    return StepGraphon(space=s, W=_freeze(W))


# ---------------------------------------------------------------------------
# partitions and projection


@dataclass(frozen=True)
class Partition:
    """Surjection of atoms onto blocks 0..block_count-1, every block nonempty."""

    n_atoms: int
    block_of: tuple[int, ...]
    block_count: int

    def __post_init__(self) -> None:
        if len(self.block_of) != self.n_atoms:
            raise ValidationError("block_of length mismatch")
        used = set(self.block_of)
        if self.n_atoms and used != set(range(self.block_count)):
            raise ValidationError("blocks must be exactly 0..block_count-1, all nonempty")

    @staticmethod
    def from_labels(labels: Sequence[int]) -> "Partition":
        """Relabel arbitrary block labels by first occurrence."""
        mapping: dict[int, int] = {}
        block_of = []
        for lbl in labels:
            if lbl not in mapping:
                mapping[lbl] = len(mapping)
            block_of.append(mapping[lbl])
        return Partition(len(block_of), tuple(block_of), len(mapping))

    @staticmethod
    def identity(n: int) -> "Partition":
        return Partition(n, tuple(range(n)), n)

    @staticmethod
    def single_block(n: int) -> "Partition":
        return Partition(n, (0,) * n, 1) if n else Partition(0, (), 0)

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.block_count)]
        for atom, b in enumerate(self.block_of):
            out[b].append(atom)
        return out

    def refines(self, coarser: "Partition") -> bool:
        """True when every block of self lies inside one block of `coarser`."""
        if coarser.n_atoms != self.n_atoms:
            return False
        image: dict[int, int] = {}
        for atom in range(self.n_atoms):
            mine, theirs = self.block_of[atom], coarser.block_of[atom]
            if mine in image:
                if image[mine] != theirs:
                    return False
            else:
                image[mine] = theirs
        return True

    @property
    def is_identity(self) -> bool:
        return self.block_count == self.n_atoms


def interval_partition(n_atoms: int, n_blocks: int) -> Partition:
    """Contiguous near-equal intervals; used by the dyadic refinement chains."""
    if not (1 <= n_blocks <= n_atoms):
        raise ValidationError("need 1 <= n_blocks <= n_atoms")
    labels = [min(i * n_blocks // n_atoms, n_blocks - 1) for i in range(n_atoms)]
    return Partition.from_labels(labels)


@dataclass(frozen=True)
class RefinementSequence:
    """Partitions of one atom set, each refining the previous (coarse first)."""

    partitions: tuple[Partition, ...]

    def __post_init__(self) -> None:
        if not self.partitions:
            raise ValidationError("empty refinement sequence")
        n = self.partitions[0].n_atoms
        for p in self.partitions:
            if p.n_atoms != n:
                raise ValidationError("partitions over different atom sets")
        for prev, cur in zip(self.partitions, self.partitions[1:]):
            if not cur.refines(prev):
                raise ValidationError("sequence is not a refinement chain")

    def __iter__(self):
        return iter(self.partitions)

    def __len__(self) -> int:
        return len(self.partitions)


def _block_masses(s: FiniteMarkovSpace, p: Partition):
    """Aggregate eta and pi over the blocks of p."""
    B = p.block_count
    if s.is_rational:
        block_eta = np.empty((B, B), dtype=object)
        block_eta[:, :] = Fraction(0)
        block_pi = np.empty(B, dtype=object)
        block_pi[:] = Fraction(0)
        for x in range(s.n):
            bx = p.block_of[x]
            block_pi[bx] += s.pi[x]
            for y in range(s.n):
                block_eta[bx, p.block_of[y]] += s.eta[x, y]
        return block_eta, block_pi
    member = np.zeros((s.n, B))
    member[np.arange(s.n), np.asarray(p.block_of)] = 1.0
    block_eta = member.T @ s.eta @ member
    block_pi = member.T @ s.pi
    return block_eta, block_pi


def project(s: FiniteMarkovSpace, p: Partition) -> FiniteMarkovSpace:
    """Stepping operator: average eta over the cells of p.

    The result lives on the same atom set, is block-constant as a graphon,
    and preserves the marginal pi exactly.
    """
    if p.n_atoms != s.n:
        raise ValidationError(f"partition over {p.n_atoms} atoms, space has {s.n}")
    block_eta, block_pi = _block_masses(s, p)
    bl = np.asarray(p.block_of)
    if s.is_rational:
        eta = np.empty((s.n, s.n), dtype=object)
        for x in range(s.n):
            for y in range(s.n):
                bx, by = p.block_of[x], p.block_of[y]
                eta[x, y] = block_eta[bx, by] * s.pi[x] * s.pi[y] / (block_pi[bx] * block_pi[by])
        return _build_space(eta, s.mode, pi=np.array(s.pi, dtype=object))
    ratio = s.pi / block_pi[bl]
    eta = block_eta[np.ix_(bl, bl)] * np.outer(ratio, ratio)
    return _build_space(eta, s.mode, pi=np.array(s.pi))


def quotient_space(s: FiniteMarkovSpace, p: Partition) -> FiniteMarkovSpace:
    """The projected space on the block atoms themselves.

    Densities of any pattern agree with those of ``project(s, p)``; the
    quotient is just the economical representation.
    """
    if p.n_atoms != s.n:
        raise ValidationError(f"partition over {p.n_atoms} atoms, space has {s.n}")
    block_eta, block_pi = _block_masses(s, p)
    if s.is_rational:
        return _build_space(block_eta, s.mode, pi=block_pi)
    return _build_space(block_eta, s.mode, pi=block_pi)


def product_space(a: FiniteMarkovSpace, b: FiniteMarkovSpace) -> FiniteMarkovSpace:
    """Tensor product: eta[(x1,x2),(y1,y2)] = a.eta[x1,y1] * b.eta[x2,y2].

    Pairs are indexed lexicographically ((x1, x2) -> x1 * b.n + x2).
    """
    if a.is_rational and b.is_rational:
        n = a.n * b.n
        if n > RATIONAL_ATOM_CAP:
            raise BudgetError(
                f"rational product would have {n} > {RATIONAL_ATOM_CAP} atoms; "
                "convert a factor to float first")
        eta = np.empty((n, n), dtype=object)
        for x1 in range(a.n):
            for x2 in range(b.n):
                for y1 in range(a.n):
                    for y2 in range(b.n):
                        eta[x1 * b.n + x2, y1 * b.n + y2] = a.eta[x1, y1] * b.eta[x2, y2]
        pi = np.empty(n, dtype=object)
        for x1 in range(a.n):
            for x2 in range(b.n):
                pi[x1 * b.n + x2] = a.pi[x1] * b.pi[x2]
        return _build_space(eta, "rational", pi=pi)
    af, bf = space_to_float(a), space_to_float(b)
    eta = np.kron(af.eta, bf.eta)
    pi = np.kron(af.pi, bf.pi)
    return _build_space(eta, "f64", pi=pi)


def adjacency_form(s: FiniteMarkovSpace, f, g) -> Scalar:
    """The bilinear form  A(f, g) = sum_{x,y} f[x] g[y] eta[x][y]."""
    if len(f) != s.n or len(g) != s.n:
        raise ValidationError("vector length mismatch")
    if s.is_rational:
        fv = [_parse_rational(v) for v in f]
        gv = [_parse_rational(v) for v in g]
        return sum(fv[x] * s.eta[x, y] * gv[y]
                   for x in range(s.n) for y in range(s.n))
    fv = np.asarray(f, dtype=float)
    gv = np.asarray(g, dtype=float)
    return float(fv @ s.eta @ gv)


# ---------------------------------------------------------------------------
# serialization


def space_to_json(s: FiniteMarkovSpace) -> str:
    if s.is_rational:
        eta = [[str(s.eta[i, j]) for j in range(s.n)] for i in range(s.n)]
    else:
        eta = [[float(v) for v in row] for row in s.eta]
    return json.dumps({"n": s.n, "eta": eta, "mode": s.mode})


def space_from_json(text: str) -> FiniteMarkovSpace:
    try:
        doc = json.loads(text)
        n = int(doc["n"])
        eta = doc["eta"]
        mode = doc.get("mode", "f64")
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad space document: {exc}") from exc
    if not isinstance(eta, list) or len(eta) != n:
        raise ParseError(f"eta must be an {n}x{n} array")
    return space_from_matrix(eta, normalize=False, mode=mode)


# ---------------------------------------------------------------------------
# built-in graphon discretizations

GRAPHON_SPECS = ("constant", "bilinear", "noncompact-blocks", "lp-blocks",
                 "convolution-log")


def discretize_graphon(name: str, n_atoms: int,
                       params: Optional[Mapping[str, object]] = None,
                       mode: str = "f64") -> FiniteMarkovSpace:
    """Discretize one of the built-in 1-regular graphon specs.

    ``constant`` and ``bilinear`` live on [0,1] with Lebesgue marginal and use
    exact cell integrals; ``convolution-log`` is the symmetric-difference
    kernel on [-1,1] (closed-form cell averages via the exponential integral);
    the two block specs ignore ``n_atoms`` (their atom count is determined by
    the block parameters).
    """
    params = dict(params or {})
    if n_atoms < 1:
        raise ValidationError("n_atoms must be >= 1")
    if name == "constant":
        return _constant_space(n_atoms, mode)
    if name == "bilinear":
        return _bilinear_space(n_atoms, mode)
    if name == "noncompact-blocks":
        K = int(params.pop("K", 10))
        _reject_extras(name, params)
        return _noncompact_blocks_space(K, mode)
    if name == "lp-blocks":
        eps = float(params.pop("eps", 0.5))
        blocks = int(params.pop("blocks", 8))
        _reject_extras(name, params)
        return _lp_blocks_space(eps, blocks, mode)
    if name == "convolution-log":
        _reject_extras(name, params)
        return _convolution_log_space(n_atoms, mode)
    raise ValidationError(f"unknown graphon spec {name!r}; have {GRAPHON_SPECS}")


def _reject_extras(name: str, params: Mapping[str, object]) -> None:
    if params:
        raise ValidationError(f"unknown parameters for {name!r}: {sorted(params)}")


def _constant_space(n: int, mode: str) -> FiniteMarkovSpace:
    if _is_rational_mode(mode):
        cell = Fraction(1, n * n)
        eta = np.empty((n, n), dtype=object)
        eta[:, :] = cell
        return _build_space(eta, mode)
    return _build_space(np.full((n, n), 1.0 / (n * n)), mode)


def _bilinear_space(n: int, mode: str) -> FiniteMarkovSpace:
    """Cells of W(x,y) = 1 + (2x-1)(2y-1) on [0,1]^2.

    The cell integral over [ih,(i+1)h] x [jh,(j+1)h] is h^2 + m_i m_j with
    m_i = h((2i+1)h - 1); the total is exactly 1 because the m_i sum to 0.
    """
    if _is_rational_mode(mode):
        h = Fraction(1, n)
        m = [h * ((2 * i + 1) * h - 1) for i in range(n)]
        eta = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                eta[i, j] = h * h + m[i] * m[j]
        return _build_space(eta, mode)
    h = 1.0 / n
    m = np.array([h * ((2 * i + 1) * h - 1.0) for i in range(n)])
    eta = h * h + np.outer(m, m)
    return _build_space(eta / eta.sum(), mode)


def _noncompact_blocks_space(K: int, mode: str) -> FiniteMarkovSpace:
    """Diagonal-block truncation with a closure atom.

    Atoms k = 1..K carry diagonal mass 2^-k (graphon value 2^k on the cell);
    a final closure atom of mass 2^-K (value 2^K) makes the total mass exactly
    1 at every K, so every tree density is exactly 1.
    """
    if K < 1:
        raise ValidationError("K must be >= 1")
    n = K + 1
    if _is_rational_mode(mode):
        eta = np.empty((n, n), dtype=object)
        eta[:, :] = Fraction(0)
        for k in range(1, K + 1):
            eta[k - 1, k - 1] = Fraction(1, 2 ** k)
        eta[K, K] = Fraction(1, 2 ** K)
        return _build_space(eta, mode)
    eta = np.zeros((n, n))
    for k in range(1, K + 1):
        eta[k - 1, k - 1] = 2.0 ** -k
    eta[K, K] = 2.0 ** -K
    return _build_space(eta, mode)


def _lp_blocks_space(eps: float, blocks: int, mode: str) -> FiniteMarkovSpace:
    """Diagonal blocks with masses a_i ~ i^(-2/(1-eps)), normalized exactly.

    Every diagonal cell carries graphon value 1/a_i, so trees again have
    density exactly 1 while cycle densities count the blocks.
    """
    if not (0.0 <= eps < 1.0):
        raise ValidationError("eps must be in [0, 1)")
    if blocks < 1:
        raise ValidationError("blocks must be >= 1")
    if _is_rational_mode(mode):
        raise ValidationError("lp-blocks uses irrational block masses; float mode only")
    exponent = 2.0 / (1.0 - eps)
    raw = np.array([float(i) ** -exponent for i in range(1, blocks + 1)])
    a = raw / raw.sum()
    eta = np.diag(a)
    return _build_space(eta / eta.sum(), mode)


def _convolution_log_space(n: int, mode: str) -> FiniteMarkovSpace:
    """Symmetric-difference kernel f(x - y) on [-1, 1], f(x)=1/(x(2-ln x)^2).

    Cell masses are exact double integrals obtained from the second
    antiderivative of the 2-periodic even extension of f:
    H(t) = e^2 E_1(2 - ln t) on [0,1] and H(t) = (t-1) + H(2-t) on [1,2].
    """
    if _is_rational_mode(mode):
        raise ValidationError("convolution-log is transcendental; float mode only")
    from scipy.special import exp1

    def second_antiderivative(t: float) -> float:
        t = abs(t)
        if t == 0.0:
            return 0.0
        if t <= 1.0:
            return float(np.exp(2.0) * exp1(2.0 - np.log(t)))
        return (t - 1.0) + float(np.exp(2.0) * exp1(2.0 - np.log(2.0 - t))) if t < 2.0 \
            else (t - 1.0)

    h = 2.0 / n
    corners = [-1.0 + i * h for i in range(n + 1)]
    H = second_antiderivative
    eta = np.empty((n, n))
    for i in range(n):
        a1, a2 = corners[i], corners[i + 1]
        for j in range(i, n):
            b1, b2 = corners[j], corners[j + 1]
            cell = H(a2 - b1) - H(a1 - b1) - H(a2 - b2) + H(a1 - b2)
            eta[i, j] = eta[j, i] = cell
    eta = np.maximum(eta, 0.0)  # clip negative rounding residue near zero cells
    return _build_space(eta / eta.sum(), mode)


def complete_graph_space(n: int, mode: str = "rational") -> FiniteMarkovSpace:
    """The K_n-space: uniform edge measure on the complete graph, no loops."""
    if n < 2:
        raise ValidationError("the complete-graph space needs n >= 2 atoms")
    if _is_rational_mode(mode):
        weight = Fraction(1, n * (n - 1))
        eta = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                eta[i, j] = Fraction(0) if i == j else weight
    else:
        eta = np.full((n, n), 1.0 / (n * (n - 1)))
        np.fill_diagonal(eta, 0.0)
    return _build_space(eta, mode)


# ---------------------------------------------------------------------------
# random instances (seeded; used by experiments and property tests)


def random_space(n: int, rng: Union[int, np.random.Generator],
                 mode: str = "f64") -> FiniteMarkovSpace:
    """A dense random space: symmetrized positive entries, normalized.

    Rational mode draws small integers so entries stay exact.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    if _is_rational_mode(mode):
        ints = rng.integers(1, 20, size=(n, n))
        sym = ints + ints.T
        total = int(sym.sum())
        eta = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                eta[i, j] = Fraction(int(sym[i, j]), total)
        return _build_space(eta, mode)
    m = rng.random((n, n)) + 0.05
    sym = (m + m.T) / 2.0
    return _build_space(sym / sym.sum(), mode)


def random_partition(n_atoms: int, rng: Union[int, np.random.Generator],
                     max_blocks: Optional[int] = None) -> Partition:
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    if max_blocks is None:
        max_blocks = n_atoms
    b = int(rng.integers(1, max_blocks + 1))
    labels = rng.integers(0, b, size=n_atoms)
    return Partition.from_labels([int(x) for x in labels])


# ---------------------------------------------------------------------------
# sphere orthogonality space


@dataclass(frozen=True)
class SphereSpace:
    """The orthogonality space on S^(d-1): steps are uniform on the subsphere
    orthogonal to the current anchors."""

    d: int
    tol: float = 1e-9

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValidationError("sphere dimension d must be >= 2")

    def conditional_sample(self, anchors: Sequence[np.ndarray],
                           rng: np.random.Generator) -> Optional[np.ndarray]:
        return sphere_conditional_sample(self.d, anchors, rng, tol=self.tol)


def _orthonormalize(vectors: Iterable[np.ndarray], d: int) -> np.ndarray:
    """Modified Gram-Schmidt with a second re-orthogonalization pass."""
    basis: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for _ in range(2):
            for q in basis:
                w = w - np.dot(q, w) * q
        norm = float(np.linalg.norm(w))
        if norm >= 1e-12:
            basis.append(w / norm)
    if not basis:
        return np.zeros((0, d))
    return np.vstack(basis)


def sphere_conditional_sample(d: int, anchors: Sequence[np.ndarray],
                              rng: np.random.Generator,
                              tol: float = 1e-9) -> Optional[np.ndarray]:
    """Uniform sample on the unit sphere of the orthogonal complement.

    Returns ``None`` (the degenerate flag) when the anchors span all of R^d:
    the conditional step has no support and no canonical choice exists.
    """
    if d < 2:
        raise ValidationError("sphere dimension d must be >= 2")
    anchor_list = [np.asarray(a, dtype=float) for a in anchors]
    for i, a in enumerate(anchor_list):
        if a.shape != (d,):
            raise ValidationError(f"anchor {i} has shape {a.shape}, expected ({d},)")
        if abs(float(np.linalg.norm(a)) - 1.0) > tol:
            raise ValidationError(f"anchor {i} is not unit length")
    basis = _orthonormalize(anchor_list, d)
    if basis.shape[0] >= d:
        return None
    while True:
        z = rng.standard_normal(d)
        for _ in range(2):  # two Gram-Schmidt passes for stability
            if basis.shape[0]:
                z = z - basis.T @ (basis @ z)
        norm = float(np.linalg.norm(z))
        if norm >= 1e-12:
            break
    out = z / norm
    return out
