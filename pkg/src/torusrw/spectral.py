"""Quasistationary analysis of the walk conditioned to avoid a removed set.

``build_kernel`` restricts the jump kernel to the complement of a removed
site set; the result is a sparse symmetric substochastic matrix.  Its Perron
eigenvector, normalized to a probability vector, is the quasistationary
distribution sigma: the long-run law of the walk conditioned on not yet
having entered the removed set.  The two leading eigenpairs come from power
iteration (with a dense eigensolve available as an oracle on small
instances), conditioned evolution comes from matrix powers, and
``hitting_from_sigma`` measures where walks launched from sigma first strike
a target set, for comparison against normalized equilibrium measures.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .lattice import BoxSpec, SiteSet, TorusGeometry
from .potential import EquilibriumReport
from .rng import RngStream

__all__ = [
    "ConditionedKernel",
    "QuasistationaryResult",
    "build_kernel",
    "quasistationary",
    "dense_eigenpairs",
    "conditioned_distribution",
    "tv_decay",
    "TvDecayReport",
    "hitting_from_sigma",
    "HittingComparison",
    "sigma_to_csv",
]


@dataclass(frozen=True)
class ConditionedKernel:
    """Jump kernel restricted to the complement of a removed set.

    ``states`` lists the surviving flat site indices in increasing order;
    ``matrix`` is the (n_states, n_states) sparse symmetric kernel with
    entries 1/(2d) on surviving edges.  Row sums are <= 1, with strict
    deficit exactly on sites adjacent to the removed set.
    """

    geometry: TorusGeometry
    removed: SiteSet
    states: np.ndarray
    matrix: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    def state_of(self, site: int) -> int:
        """Dense-index position of a flat site index (error if removed)."""
        pos = int(np.searchsorted(self.states, site))
        if pos >= self.n_states or self.states[pos] != site:
            raise ValueError(f"site {site} is not in the state set")
        return pos


def build_kernel(geometry: TorusGeometry, removed: SiteSet) -> ConditionedKernel:
    """Restrict the walk kernel to ``geometry``'s sites minus ``removed``.

    The complement must be nonempty and connected (checked); an empty
    removed set gives back the full stochastic kernel.
    """
    keep = ~removed.mask
    states = np.nonzero(keep)[0]
    if states.size == 0:
        raise ValueError("removed set covers the whole torus")
    lookup = np.full(geometry.n_sites, -1, dtype=np.int64)
    lookup[states] = np.arange(states.size)
    nbr = geometry.neighbors(states)              # (n_states, 2d)
    nbr_state = lookup[nbr]
    rows = np.repeat(np.arange(states.size), 2 * geometry.d)
    cols = nbr_state.ravel()
    ok = cols >= 0
    mat = sp.csr_matrix(
        (np.full(int(ok.sum()), 1.0 / (2 * geometry.d)), (rows[ok], cols[ok])),
        shape=(states.size, states.size),
    )
    n_comp = connected_components(mat, directed=False, return_labels=False)
    if n_comp != 1:
        raise ValueError(f"complement of the removed set is disconnected ({n_comp} components)")
    return ConditionedKernel(geometry=geometry, removed=removed, states=states, matrix=mat)


@dataclass(frozen=True)
class QuasistationaryResult:
    sigma: np.ndarray          # probability vector over kernel.states
    lam1: float
    lam2: float
    v1: np.ndarray             # unit Perron eigenvector (nonnegative)
    residual1: float           # ||P v1 - lam1 v1||_inf
    residual2: float
    iterations1: int
    iterations2: int

    @property
    def gap(self) -> float:
        return self.lam1 - self.lam2


def _power_iterate(mat, v0, tol, max_iter, deflate=None):
    """Leading eigenpair of ``mat`` on the subspace orthogonal to ``deflate``.

    Iterates the half-shifted operator (mat + I)/2: the walk graph is
    bipartite for even side lengths, so mat's spectrum is symmetric and the
    -lam1 mirror mode would otherwise never die out.  The shift is strictly
    monotone on eigenvalues, so leading pairs correspond; Rayleigh quotients
    and residuals are reported for ``mat`` itself.
    """
    v = v0 / np.linalg.norm(v0)
    res = np.inf
    for it in range(1, max_iter + 1):
        w = 0.5 * (mat @ v + v)
        if deflate is not None:
            w -= deflate * (deflate @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise RuntimeError("iteration collapsed to the zero vector")
        v = w / nrm
        if it % 8 == 0 or it == max_iter:
            w2 = mat @ v
            if deflate is not None:
                w2 -= deflate * (deflate @ w2)
            lam = float(v @ w2)
            res = float(np.abs(w2 - lam * v).max())
            if res <= tol:
                return lam, v, res, it
    raise RuntimeError(
        f"power iteration did not reach residual {tol:g} in {max_iter} steps "
        f"(last residual {res:g})"
    )


def quasistationary(kernel: ConditionedKernel, tol: float = 1e-12,
                    max_iter: int = 1_000_000) -> QuasistationaryResult:
    """Two leading eigenpairs of the restricted kernel, and sigma.

    Plain power iteration with Rayleigh-quotient estimates for (lam1, v1);
    lam2 from iteration deflated against v1.  sigma = v1 / sum(v1).
    """
    n = kernel.n_states
    mat = kernel.matrix
    lam1, v1, res1, it1 = _power_iterate(mat, np.ones(n), tol, max_iter)
    if v1.sum() < 0:
        v1 = -v1
    # deterministic start with broken symmetry for the second eigenvector
    gen = np.random.default_rng(0xC0FFEE)
    w0 = gen.standard_normal(n)
    w0 -= v1 * (v1 @ w0)
    lam2, _v2, res2, it2 = _power_iterate(mat, w0, tol, max_iter, deflate=v1)
    sigma = v1 / v1.sum()
    return QuasistationaryResult(sigma=sigma, lam1=lam1, lam2=lam2, v1=v1,
                                 residual1=res1, residual2=res2,
                                 iterations1=it1, iterations2=it2)


def dense_eigenpairs(kernel: ConditionedKernel, max_states: int = 4096):
    """Oracle eigensolve: (lam1, lam2, v1) by full symmetric diagonalization."""
    n = kernel.n_states
    if n > max_states:
        raise ValueError(f"dense oracle limited to {max_states} states, got {n}")
    vals, vecs = np.linalg.eigh(kernel.matrix.toarray())
    v1 = vecs[:, -1]
    if v1.sum() < 0:
        v1 = -v1
    return float(vals[-1]), float(vals[-2]), v1


def conditioned_distribution(kernel: ConditionedKernel, start: int,
                             t_steps: int) -> np.ndarray:
    """Law of the surviving walk after ``t_steps`` jumps from ``start``.

    Discrete-time surrogate: the ``start`` row of the t-th kernel power,
    renormalized.  (The continuous-time semigroup shares eigenvectors; its
    rates are the logs of these eigenvalues, so convergence-rate statements
    transfer.)
    """
    if t_steps < 0:
        raise ValueError("t_steps must be >= 0")
    p = np.zeros(kernel.n_states)
    p[kernel.state_of(start)] = 1.0
    for _ in range(t_steps):
        p = kernel.matrix @ p          # symmetric: row/column evolution agree
        s = p.sum()
        if s == 0.0:
            raise RuntimeError("distribution died out (kernel not irreducible?)")
        p /= s
    return p


@dataclass(frozen=True)
class TvDecayReport:
    t: np.ndarray
    tv: np.ndarray
    fitted_slope: float        # d ln TV / d t, negative
    predicted_slope: float     # -ln(lam1/lam2)
    fit_range: tuple[int, int]

    @property
    def relative_error(self) -> float:
        return abs(self.fitted_slope - self.predicted_slope) / abs(self.predicted_slope)


def _uniformized_unit_step(mat, p: np.ndarray, k_max: int = 24) -> np.ndarray:
    """One unit of continuous time: exp(-(I - mat)) p by truncated Poisson series."""
    from math import exp, factorial

    acc = exp(-1.0) * p
    w = p
    for k in range(1, k_max + 1):
        w = mat @ w
        acc = acc + (exp(-1.0) / factorial(k)) * w
    return acc


def tv_decay(kernel: ConditionedKernel, start: int, result: QuasistationaryResult,
             t_max: int | None = None) -> TvDecayReport:
    """Total-variation distance of the conditioned law from sigma, with a slope fit.

    Evolution runs in continuous time (uniformized semigroup, one unit per
    step): for even side lengths the walk graph is bipartite, so the
    discrete-time conditioned chain is 2-periodic and its law never settles —
    the continuous-time law does.  The fit uses the window where TV is
    between 1e-9 and 0.2, past the initial transient and above the numerical
    floor; the per-unit-time reference slope is -ln(lam1/lam2).
    """
    rate = np.log(result.lam1 / result.lam2)
    if t_max is None:
        t_max = int(np.ceil(25.0 / rate)) + 50
    p = np.zeros(kernel.n_states)
    p[kernel.state_of(start)] = 1.0
    tvs = np.empty(t_max + 1)
    tvs[0] = 0.5 * np.abs(p - result.sigma).sum()
    for t in range(1, t_max + 1):
        p = _uniformized_unit_step(kernel.matrix, p)
        p /= p.sum()
        tvs[t] = 0.5 * np.abs(p - result.sigma).sum()
    ts = np.arange(t_max + 1)
    use = (tvs < 0.2) & (tvs > 1e-9)
    if use.sum() < 5:
        raise RuntimeError("too few points in the fit window; increase t_max")
    coef = np.polyfit(ts[use], np.log(tvs[use]), 1)
    lo, hi = int(ts[use][0]), int(ts[use][-1])
    return TvDecayReport(t=ts, tv=tvs, fitted_slope=float(coef[0]),
                         predicted_slope=-rate, fit_range=(lo, hi))


@dataclass(frozen=True)
class HittingComparison:
    """Hit frequencies on a target's inner boundary vs. equilibrium prediction."""

    sites: np.ndarray          # flat indices of boundary sites that can be hit
    counts: np.ndarray
    frequencies: np.ndarray
    predicted: np.ndarray      # e_A(x - x_i) / (n cap(A)) per site
    n_hits: int

    @property
    def relative_deviation(self) -> np.ndarray:
        return self.frequencies / self.predicted - 1.0

    @property
    def max_abs_relative_deviation(self) -> float:
        return float(np.abs(self.relative_deviation).max())


def hitting_from_sigma(geometry: TorusGeometry, kernel: ConditionedKernel,
                       result: QuasistationaryResult, boxes: Sequence[BoxSpec],
                       eq: EquilibriumReport, trials: int,
                       rng: RngStream | np.random.Generator) -> HittingComparison:
    """Where walks from sigma first strike a union of congruent boxes.

    ``eq`` is the equilibrium measure of a single box shape centered at the
    origin; the prediction at boundary site x of box i is
    e(x - center_i) / (n * cap).  The boxes must be pairwise disjoint and lie
    inside the removed set that defined ``kernel`` (starts avoid them).
    """
    boxes = list(boxes)
    target = SiteSet.from_boxes(geometry, boxes)
    if sum(len(b.sites(geometry)) for b in boxes) != target.indices.size:
        raise ValueError("boxes overlap")
    if target.mask[kernel.states].any():
        raise ValueError("target boxes must be inside the removed set of the kernel")

    # per-site prediction: translate the origin-centered equilibrium measure
    pred = np.zeros(geometry.n_sites)
    n_boxes = len(boxes)
    for b in boxes:
        center = np.asarray(b.center, dtype=np.int64)
        coords = (eq.points + center) % geometry.N
        idx = geometry.site_index(coords)
        pred[idx] += eq.e_mid / (n_boxes * eq.cap_mid)
    support = np.nonzero(pred > 0)[0]

    gen = rng.generator() if isinstance(rng, RngStream) else rng
    starts = kernel.states[gen.choice(kernel.n_states, size=trials, p=result.sigma)]
    out = np.empty(trials, dtype=np.int64)
    horizon = 1e18
    _kernels.batch_hit_sites(gen, geometry.N, geometry.strides, starts,
                             target.mask, horizon, out)
    if (out < 0).any():
        raise RuntimeError("a walk exhausted its horizon before hitting the target")
    counts = np.bincount(out, minlength=geometry.n_sites)[support]
    return HittingComparison(
        sites=support, counts=counts,
        frequencies=counts / trials, predicted=pred[support],
        n_hits=int(counts.sum()),
    )


def sigma_to_csv(path, kernel: ConditionedKernel, sigma: np.ndarray) -> None:
    """Write sigma as CSV rows: one line per state, coordinates then mass."""
    coords = kernel.geometry.coords_of(kernel.states)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k+1}" for k in range(kernel.geometry.d)] + ["sigma"])
        for row, mass in zip(coords, sigma):
            w.writerow([*map(int, row), f"{mass:.15g}"])
