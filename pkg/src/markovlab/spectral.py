"""Spectra of finite Markov spaces and the log-convolution eigenvalue study.

The symmetrized kernel S[x][y] = eta[x][y] / sqrt(pi[x]*pi[y]) is similar to
the row-stochastic transition matrix, so its eigenvalues live in [-1, 1] with
top eigenvalue exactly 1 (eigenvector sqrt(pi)).  Cycle densities are
eigenvalue power sums, t(C_k) = sum lambda_i^k, which ties the contraction
engine to a completely independent computational route.

The convolution section computes Fourier-cosine eigenvalues of the kernel
f(x) = 1/(x*(2-ln x)^2) on [0,1], whose logarithmic singularity makes every
eigenvalue power sum diverge -- no power of the operator has finite trace.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .errors import BudgetError, MarkovLabError, ValidationError
from .spaces import FiniteMarkovSpace, Partition, project, space_to_float

__all__ = [
    "Spectrum",
    "ProjectedSpectrumReport",
    "ConvolutionRow",
    "ConvolutionReport",
    "spectrum",
    "cycle_density_spectral",
    "schatten_norm",
    "projected_spectrum_check",
    "convolution_eigenvalue",
    "convolution_report",
]

SPECTRUM_SIZE_CAP = 4096
JACOBI_TOL = 1e-14
EIGENVALUE_TOL = 1e-9
INTERLACING_TOL = 1e-10
SCHATTEN_QS = (2, 3, 4, 6)
PLATEAU_TOL = 1e-6
CHECKPOINTS = (64, 256, 1024, 4096)
KMAX_CAP = 4096
_QUAD_SPLIT = 1e-3  # below this the substitution u = 2 - ln x takes over


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues of the symmetrized kernel, sorted descending.

    ``residual`` is the off-diagonal Frobenius norm left by the solver; by
    Weyl's inequality it bounds the eigenvalue error.
    """

    values: np.ndarray
    residual: float

    @property
    def n(self) -> int:
        return len(self.values)


def _off_norm(A: np.ndarray) -> float:
    B = A.copy()
    np.fill_diagonal(B, 0.0)
    return float(np.linalg.norm(B))


def _jacobi_sweep(A: np.ndarray, V) -> None:
    """One cyclic sweep of two-sided rotations, row-major upper triangle."""
    n = A.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = A[p, q]
            if apq == 0.0:
                continue
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            if abs(theta) > 1e150:  # tiny angle; the exact formula overflows
                t = 0.5 / theta
            else:
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.hypot(theta, 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            rp = A[p, :].copy()
            rq = A[q, :].copy()
            A[p, :] = c * rp - s * rq
            A[q, :] = s * rp + c * rq
            cp = A[:, p].copy()
            cq = A[:, q].copy()
            A[:, p] = c * cp - s * cq
            A[:, q] = s * cp + c * cq
            if V is not None:
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq


def jacobi_eigenvalues(S: np.ndarray, tol: float = JACOBI_TOL,
                       max_sweeps: int = 30, vectors: bool = False) -> tuple:
    """Diagonalize a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues sorted descending, final off-diagonal Frobenius
    norm), plus the matching orthonormal eigenvector columns when
    ``vectors`` is set.
    """
    A = np.array(S, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("matrix must be square")
    V = np.eye(A.shape[0]) if vectors else None
    scale = float(np.linalg.norm(A)) or 1.0
    off = _off_norm(A)
    for _ in range(max_sweeps):
        if off <= tol:
            break
        _jacobi_sweep(A, V)
        new_off = _off_norm(A)
        if new_off >= off and off <= 1e-8 * scale:
            # deep in the quadratic regime a non-improving sweep means the
            # rounding floor; report the residual rather than spinning
            off = new_off
            break
        off = new_off
    if off > tol and off > 1e-12 * scale:
        raise MarkovLabError(f"Jacobi solver stalled at off-norm {off:.3e}")
    order = np.argsort(np.diag(A))[::-1]
    values = np.diag(A)[order]
    if vectors:
        return values, off, V[:, order]
    return values, off


def spectrum(s: FiniteMarkovSpace) -> Spectrum:
    """Eigenvalues of S[x][y] = eta[x][y]/sqrt(pi[x]*pi[y]), descending."""
    if s.n > SPECTRUM_SIZE_CAP:
        raise BudgetError(f"spectrum supports at most {SPECTRUM_SIZE_CAP} atoms")
    sf = space_to_float(s)
    root = np.sqrt(np.asarray(sf.pi))
    S = np.asarray(sf.eta) / np.outer(root, root)
    values, residual = jacobi_eigenvalues(S)
    if len(values) != s.n:
        raise MarkovLabError("eigenvalue count mismatch")
    if abs(values[0] - 1.0) > EIGENVALUE_TOL:
        raise MarkovLabError(f"top eigenvalue {values[0]} is not 1; the space "
                             "is not 1-regular or the solver failed")
    if values[-1] < -1.0 - EIGENVALUE_TOL:
        raise MarkovLabError(f"eigenvalue {values[-1]} below -1")
    values.setflags(write=False)
    return Spectrum(values=values, residual=residual)


def cycle_density_spectral(s: FiniteMarkovSpace, k: int) -> float:
    """t(C_k) as the eigenvalue power sum of the adjacency kernel."""
    if k < 3:
        raise ValidationError("cycles need k >= 3")
    return float(np.sum(spectrum(s).values ** k))


def schatten_norm(s: FiniteMarkovSpace, p: int) -> float:
    if p < 1:
        raise ValidationError("Schatten norms need p >= 1")
    return _schatten(spectrum(s).values, p)


def _schatten(values: np.ndarray, p: int) -> float:
    return float(np.sum(np.abs(values) ** p) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class ProjectedSpectrumReport:
    spec_full: Spectrum
    spec_proj: Spectrum
    interlacing_ok: bool
    schatten_contraction_ok: bool


def _signed_parts(values: np.ndarray, n: int) -> tuple:
    """(k-th largest positive, k-th most negative) sequences, zero-padded."""
    pos = np.sort(values[values > 0])[::-1]
    neg = np.sort(values[values < 0])
    pos = np.concatenate([pos, np.zeros(n - len(pos))])
    neg = np.concatenate([neg, np.zeros(n - len(neg))])
    return pos, neg


def projected_spectrum_check(s: FiniteMarkovSpace, p: Partition) -> ProjectedSpectrumReport:
    """Compare the spectrum before and after projecting onto a partition.

    Projection composes the kernel with an orthogonal projection on both
    sides, so positive eigenvalues can only drop, negative ones only rise,
    and every Schatten norm contracts.
    """
    spec_full = spectrum(s)
    spec_proj = spectrum(project(s, p))
    pos_f, neg_f = _signed_parts(spec_full.values, s.n)
    pos_p, neg_p = _signed_parts(spec_proj.values, s.n)
    interlacing_ok = bool(np.all(pos_p <= pos_f + INTERLACING_TOL)
                          and np.all(neg_p >= neg_f - INTERLACING_TOL))
    schatten_contraction_ok = all(
        _schatten(spec_proj.values, q) <= _schatten(spec_full.values, q) + INTERLACING_TOL
        for q in SCHATTEN_QS)
    return ProjectedSpectrumReport(spec_full=spec_full, spec_proj=spec_proj,
                                   interlacing_ok=interlacing_ok,
                                   schatten_contraction_ok=schatten_contraction_ok)


# ---------------------------------------------------------------------------
# convolution kernel eigenvalues (Fourier-cosine coefficients)


def _kernel(x):
    return 1.0 / (x * (2.0 - np.log(x)) ** 2)


@lru_cache(maxsize=8192)
def convolution_eigenvalue(k: int) -> float:
    """lambda_k = integral_0^1 f(x) cos(k pi x) dx for f = 1/(x (2-ln x)^2).

    The singular head (0, 1e-3] is handled by u = 2 - ln x, under which
    f(x) dx becomes du/u^2 on [u0, oo); splitting off the exact tail
    integral 1/u0 leaves a smooth exponentially-decaying correction.
    """
    if not (0 <= k <= KMAX_CAP):
        raise ValidationError(f"k must lie in [0, {KMAX_CAP}]")
    u0 = 2.0 - math.log(_QUAD_SPLIT)
    if k == 0:
        body = quad(_kernel, _QUAD_SPLIT, 1.0, epsabs=1e-12, epsrel=1e-12,
                    limit=400)[0]
        return body + 1.0 / u0
    w = k * math.pi
    body = quad(_kernel, _QUAD_SPLIT, 1.0, weight="cos", wvar=w,
                epsabs=1e-12, epsrel=1e-12, limit=400)[0]
    # head = 1/u0 + integral of (cos(w e^{2-u}) - 1)/u^2, which decays like
    # e^{-2u}; beyond u_cut the cosine is within e^{-40} of 1
    u_cut = 2.0 + math.log(w) + 20.0
    correction = quad(lambda u: (math.cos(w * math.exp(2.0 - u)) - 1.0) / (u * u),
                      u0, u_cut, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    return body + 1.0 / u0 + correction


def eigenvalue_lower_bound(k: int) -> float:
    """The asymptotic guarantee 1/(4*sqrt(2)*(2+ln 4k)); defined for k >= 1."""
    if k < 1:
        return math.nan
    return 1.0 / (4.0 * math.sqrt(2.0) * (2.0 + math.log(4.0 * k)))


@dataclass(frozen=True)
class ConvolutionRow:
    k: int
    lam: float
    lower_bound: float
    ratio: float


@dataclass(frozen=True, eq=False)
class ConvolutionReport:
    rows: tuple
    checkpoints: tuple
    partial_sums: dict  # power -> tuple of partial sums at the checkpoints
    strictly_increasing: dict  # power -> bool
    plateau_free: dict  # power -> bool (every increment exceeds PLATEAU_TOL)


def convolution_report(k_max: int, powers: Sequence[int]) -> ConvolutionReport:
    """Eigenvalue table plus diverging partial sums of lambda^l for each l."""
    if not (0 <= k_max <= KMAX_CAP):
        raise ValidationError(f"k_max must lie in [0, {KMAX_CAP}]")
    with ThreadPoolExecutor(max_workers=8) as pool:
        lams = list(pool.map(convolution_eigenvalue, range(k_max + 1)))
    rows = []
    for k, lam in enumerate(lams):
        bound = eigenvalue_lower_bound(k)
        ratio = lam / bound if k >= 1 else math.nan
        rows.append(ConvolutionRow(k=k, lam=lam, lower_bound=bound, ratio=ratio))
    checkpoints = tuple(K for K in CHECKPOINTS if K <= k_max) or (k_max,)
    lam_arr = np.array(lams)
    partial_sums = {}
    strictly_increasing = {}
    plateau_free = {}
    for ell in powers:
        sums = tuple(float(np.sum(lam_arr[:K + 1] ** ell)) for K in checkpoints)
        diffs = [b - a for a, b in zip(sums, sums[1:])]
        partial_sums[ell] = sums
        strictly_increasing[ell] = all(d > 0 for d in diffs)
        plateau_free[ell] = all(d > PLATEAU_TOL for d in diffs)
    return ConvolutionReport(rows=tuple(rows), checkpoints=checkpoints,
                             partial_sums=partial_sums,
                             strictly_increasing=strictly_increasing,
                             plateau_free=plateau_free)
