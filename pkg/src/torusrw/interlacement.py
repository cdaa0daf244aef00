"""Local sampling of the random-interlacement trace on a finite window.

The sampler realizes the classical recipe for the trace on a finite set K of
Z^d points: a Poisson(u * cap(K)) number of independent walks started from
the normalized equilibrium measure of K, each recording the subset of K it
visits.  Walks are simulated until they leave a ball whose radius is set by a
:class:`TruncationPolicy`; the probability that a truncated walk would have
returned to K is budgeted explicitly rather than silently ignored.

Closed forms for the one- and two-point vacancy functions live here too, so
the sampler can be checked against them without any other machinery.

Only window traces are produced.  A globally consistent construction over
doubly-infinite trajectories has no finite algorithmic counterpart; traces on
nested windows agree only up to the truncation budget.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .potential import EquilibriumReport, GreenTable, equilibrium_measure, hit_prob_far_bound
from .rng import RngStream

__all__ = [
    "TruncationPolicy",
    "InterlacementSample",
    "VacancyBatch",
    "LabeledBatch",
    "sample_interlacement",
    "sample_batch",
    "sample_labeled",
    "vacancy_one",
    "vacancy_two",
    "two_point_sum",
    "additivity_check",
    "AdditivityReport",
    "write_samples_jsonl",
    "read_samples_jsonl",
]


def _as_points(points: Sequence | np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty (m, d) integer array")
    if len(np.unique(pts, axis=0)) != pts.shape[0]:
        raise ValueError("duplicate points in window")
    return pts


def _center(points: np.ndarray) -> np.ndarray:
    return np.rint(points.mean(axis=0)).astype(np.int64)


def _enclosing_radius(points: np.ndarray) -> int:
    c = _center(points)
    return int(np.abs(points - c).max()) if points.size else 0


@dataclass(frozen=True)
class TruncationPolicy:
    """Outer radius at which simulated walks are stopped.

    ``radius`` is the l-infinity radius R_t around the window's center; a
    walk is killed on leaving the ball.  ``residual_budget`` bounds the
    probability that a killed walk would have re-entered the window, via the
    far-hitting envelope c * (r1/r2)^(d-2).  The budget shrinks as the radius
    grows, and it is attached to every sample batch.
    """

    radius: int

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("truncation radius must be >= 1")

    @classmethod
    def for_window(cls, points, multiplier: int = 8, floor: int = 16) -> "TruncationPolicy":
        """Default policy: ``multiplier`` times the enclosing radius (with a floor)."""
        pts = _as_points(points)
        return cls(max(multiplier * _enclosing_radius(pts), floor))

    def residual_budget(self, points, d: int | None = None) -> float:
        pts = _as_points(points)
        r_enc = max(_enclosing_radius(pts), 1)
        return hit_prob_far_bound(r_enc, self.radius, pts.shape[1])


@dataclass(frozen=True)
class InterlacementSample:
    """One window trace: the visited subset of the window at level u."""

    u: float
    points: np.ndarray          # (m, d) window, Z^d coordinates
    visited: np.ndarray         # (m,) bool
    n_trajectories: int
    truncation_radius: int
    residual_budget: float

    @property
    def visited_count(self) -> int:
        return int(np.count_nonzero(self.visited))

    @property
    def vacant(self) -> np.ndarray:
        return ~self.visited


class _Window:
    """Shared geometry for one (points, policy) pair: cube, kid map, starts."""

    def __init__(self, points: np.ndarray, policy: TruncationPolicy):
        self.points = points
        m, d = points.shape
        r_enc = _enclosing_radius(points)
        if policy.radius < max(r_enc, 1):
            raise ValueError(
                f"truncation radius {policy.radius} is smaller than the "
                f"window's enclosing radius {r_enc}"
            )
        self.policy = policy
        self.center = _center(points)
        L = 2 * policy.radius + 1
        self.L = L
        self.strides = np.array([L ** (d - 1 - k) for k in range(d)], dtype=np.int64)
        local = points - self.center + policy.radius
        self.point_flat = local @ self.strides
        self.kid = np.full(L**d, -1, dtype=np.int64)
        self.kid[self.point_flat] = np.arange(m)
        self.budget = policy.residual_budget(points)


def _run_batch(win: _Window, eq: EquilibriumReport, u: float, n_samples: int,
               gen: np.random.Generator, labels_to: float | None):
    """Poisson counts, weighted starts, (optional labels), then the walk kernel.

    The draw order — ``poisson`` batch, ``choice`` batch, ``uniform`` labels,
    then per-jump ``integers`` inside the kernel — is fixed; replays depend
    on it.
    """
    m = win.points.shape[0]
    cap = eq.cap_mid
    weights = eq.e_mid / eq.e_mid.sum()
    lam = (labels_to if labels_to is not None else u) * cap
    counts = gen.poisson(lam, size=n_samples)
    total = int(counts.sum())
    slots = gen.choice(m, size=total, p=weights) if total else np.empty(0, dtype=np.int64)
    labels = gen.uniform(0.0, labels_to, size=total) if labels_to is not None else None
    if labels_to is not None:
        # one mark-row per trajectory so any sub-level can be assembled later
        rows = np.arange(total, dtype=np.int64)
        marks = np.zeros((total, m), dtype=np.bool_)
    else:
        rows = np.repeat(np.arange(n_samples, dtype=np.int64), counts)
        marks = np.zeros((n_samples, m), dtype=np.bool_)
    if total:
        starts = win.point_flat[slots].astype(np.int64)
        _kernels.mark_window_traces(gen, win.L, win.strides, starts, rows, win.kid, marks)
    return counts, marks, labels


def sample_interlacement(points, u: float, eq: EquilibriumReport | None = None,
                         policy: TruncationPolicy | None = None,
                         rng: RngStream | np.random.Generator | None = None,
                         ) -> InterlacementSample:
    """Sample the interlacement trace on a window at level ``u``.

    ``points`` is an (m, d) array of Z^d coordinates.  ``eq`` is the window's
    equilibrium measure (computed on demand when omitted — expensive, so pass
    it when sampling repeatedly).  ``u = 0`` yields an empty trace from zero
    trajectories.
    """
    if u < 0:
        raise ValueError("level u must be >= 0")
    pts = _as_points(points)
    if eq is None:
        eq = equilibrium_measure(pts)
    if policy is None:
        policy = TruncationPolicy.for_window(pts)
    win = _Window(pts, policy)
    gen = _as_generator(rng)
    counts, marks, _ = _run_batch(win, eq, u, 1, gen, None)
    return InterlacementSample(
        u=float(u), points=pts, visited=marks[0],
        n_trajectories=int(counts[0]),
        truncation_radius=policy.radius, residual_budget=win.budget,
    )


@dataclass(frozen=True)
class VacancyBatch:
    """Many independent window traces at one level, stored as a bool matrix."""

    u: float
    points: np.ndarray
    visited: np.ndarray          # (n_samples, m) bool
    n_trajectories: np.ndarray   # (n_samples,) int
    truncation_radius: int
    residual_budget: float

    @property
    def n_samples(self) -> int:
        return self.visited.shape[0]

    def vacancy_frequency(self, slot: int | None = None) -> float:
        """Fraction of samples leaving ``slot`` (or the whole window) vacant."""
        vac = ~self.visited
        col = vac[:, slot] if slot is not None else vac.all(axis=1)
        return float(col.mean())

    def standard_error(self, slot: int | None = None) -> float:
        p = self.vacancy_frequency(slot)
        return float(np.sqrt(p * (1.0 - p) / self.n_samples))


def sample_batch(points, u: float, n_samples: int,
                 eq: EquilibriumReport | None = None,
                 policy: TruncationPolicy | None = None,
                 rng: RngStream | np.random.Generator | None = None) -> VacancyBatch:
    """Draw ``n_samples`` independent traces at level ``u`` in one kernel pass."""
    if u < 0:
        raise ValueError("level u must be >= 0")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    pts = _as_points(points)
    if eq is None:
        eq = equilibrium_measure(pts)
    if policy is None:
        policy = TruncationPolicy.for_window(pts)
    win = _Window(pts, policy)
    gen = _as_generator(rng)
    counts, marks, _ = _run_batch(win, eq, u, n_samples, gen, None)
    return VacancyBatch(
        u=float(u), points=pts, visited=marks, n_trajectories=counts,
        truncation_radius=policy.radius, residual_budget=win.budget,
    )


@dataclass(frozen=True)
class LabeledBatch:
    """Traces with Uniform(0, u_max) trajectory labels: all levels u <= u_max at once.

    Restricting to trajectories with label <= u gives an exact level-u batch,
    and the restriction is monotone in u by construction — the coupling the
    labeled point-process construction provides for free.
    """

    u_max: float
    points: np.ndarray
    traj_visited: np.ndarray    # (n_traj, m) bool
    labels: np.ndarray          # (n_traj,)
    sample_of: np.ndarray       # (n_traj,) -> sample row
    n_samples: int
    truncation_radius: int
    residual_budget: float

    def at_level(self, u: float) -> np.ndarray:
        """Visited matrix (n_samples, m) using only trajectories with label <= u."""
        if not 0.0 <= u <= self.u_max:
            raise ValueError("level outside [0, u_max]")
        m = self.points.shape[0]
        out = np.zeros((self.n_samples, m), dtype=np.bool_)
        keep = self.labels <= u
        np.logical_or.at(out, self.sample_of[keep], self.traj_visited[keep])
        return out


def sample_labeled(points, u_max: float, n_samples: int,
                   eq: EquilibriumReport | None = None,
                   policy: TruncationPolicy | None = None,
                   rng: RngStream | np.random.Generator | None = None) -> LabeledBatch:
    if u_max <= 0:
        raise ValueError("u_max must be > 0")
    pts = _as_points(points)
    if eq is None:
        eq = equilibrium_measure(pts)
    if policy is None:
        policy = TruncationPolicy.for_window(pts)
    win = _Window(pts, policy)
    gen = _as_generator(rng)
    counts, marks, labels = _run_batch(win, eq, u_max, n_samples, gen, u_max)
    sample_of = np.repeat(np.arange(n_samples, dtype=np.int64), counts)
    return LabeledBatch(
        u_max=float(u_max), points=pts, traj_visited=marks, labels=labels,
        sample_of=sample_of, n_samples=n_samples,
        truncation_radius=policy.radius, residual_budget=win.budget,
    )


def _as_generator(rng) -> np.random.Generator:
    if rng is None:
        return RngStream(0, 0).generator()
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


# ---------------------------------------------------------------------------
# closed forms


def vacancy_one(u: float, g0: float) -> float:
    """P[a given site is vacant at level u] = exp(-u / g(0))."""
    if u < 0:
        raise ValueError("level u must be >= 0")
    return float(np.exp(-u / g0))


def vacancy_two(u: float, x, green: GreenTable) -> float:
    """P[0 and x both vacant at level u] = exp(-2u / (g(0) + g(x)))."""
    if u < 0:
        raise ValueError("level u must be >= 0")
    x = np.asarray(x, dtype=np.int64)
    if not x.any():
        raise ValueError("two-point vacancy needs x != 0")
    gx = float(green.g(x.reshape(1, -1))[0])
    return float(np.exp(-2.0 * u / (green.g0 + gx)))


def two_point_sum(points, u: float, green: GreenTable) -> tuple[float, float]:
    """Sum of pair vacancies over a window not containing 0, with its envelope.

    Returns ``(sum, envelope)`` where ``sum = sum_v exp(-2u/(g(0)+g(v)))`` and
    ``envelope = |K| exp(-2u/g0) exp(2u g_max / (g0 (g0+g_max)))`` with
    ``g_max`` the largest Green value over the window.  The envelope dominates
    the sum for every u >= 0 because g -> g/(g0+g) is increasing.

    The two exponential factors collapse to ``exp(-2u/(g0+g_max))``; the
    envelope is evaluated in that form, and the sum with a correctly-rounded
    accumulator, so the inequality also holds in float arithmetic when the
    bound is tight (windows on a single symmetry orbit attain equality).
    """
    pts = _as_points(points)
    if (~pts.any(axis=1)).any():
        raise ValueError("window must not contain the origin")
    if u < 0:
        raise ValueError("level u must be >= 0")
    g0 = green.g0
    gv = green.g(pts)
    total = math.fsum(np.exp(-2.0 * u / (g0 + gv)))
    g_max = float(gv.max())
    envelope = float(len(pts) * np.exp(-2.0 * u / (g0 + g_max)))
    return total, envelope


# ---------------------------------------------------------------------------
# additivity


@dataclass(frozen=True)
class AdditivityReport:
    """Two-sample comparison: union of levels (u, v) against level u+v."""

    u: float
    v: float
    n_samples: int
    chi2: float
    dof: int
    p_value: float
    max_site_z: float
    bin_edges: np.ndarray

    @property
    def consistent(self) -> bool:
        return self.p_value > 0.01


def additivity_check(points, u: float, v: float, n_samples: int = 10_000,
                     eq: EquilibriumReport | None = None,
                     policy: TruncationPolicy | None = None,
                     rng: RngStream | None = None) -> AdditivityReport:
    """Test that independent traces at u and v union to a trace at u+v.

    Arm one is the pointwise union of independent level-u and level-v
    batches; arm two is a direct level-(u+v) batch.  The visited-count
    distributions are compared with a two-sample chi-square (bins pooled to
    expected counts >= 5), and the largest per-site marginal z-score is
    reported alongside.
    """
    if u < 0 or v < 0:
        raise ValueError("levels must be >= 0")
    pts = _as_points(points)
    if eq is None:
        eq = equilibrium_measure(pts)
    if policy is None:
        policy = TruncationPolicy.for_window(pts)
    base = rng if rng is not None else RngStream(0, 0)
    arm_u = sample_batch(pts, u, n_samples, eq, policy, base.child(1))
    arm_v = sample_batch(pts, v, n_samples, eq, policy, base.child(2))
    union = arm_u.visited | arm_v.visited
    direct = sample_batch(pts, u + v, n_samples, eq, policy, base.child(3)).visited

    m = pts.shape[0]
    c1 = np.bincount(union.sum(axis=1), minlength=m + 1).astype(np.float64)
    c2 = np.bincount(direct.sum(axis=1), minlength=m + 1).astype(np.float64)
    chi2, dof, edges = _pooled_chi2(c1, c2)
    from scipy import stats

    p = float(stats.chi2.sf(chi2, dof)) if dof > 0 else 1.0
    f1 = union.mean(axis=0)
    f2 = direct.mean(axis=0)
    pbar = (f1 + f2) / 2.0
    se = np.sqrt(np.maximum(pbar * (1 - pbar) * 2.0 / n_samples, 1e-300))
    max_z = float(np.abs((f1 - f2) / se).max())
    return AdditivityReport(u=float(u), v=float(v), n_samples=n_samples,
                            chi2=float(chi2), dof=dof, p_value=p,
                            max_site_z=max_z, bin_edges=edges)


def _pooled_chi2(c1: np.ndarray, c2: np.ndarray) -> tuple[float, int, np.ndarray]:
    """Two-sample chi-square over count histograms, pooling sparse bins."""
    keep = (c1 + c2) > 0
    c1, c2 = c1[keep], c2[keep]
    orig_bins = np.nonzero(keep)[0]
    # pool adjacent bins until each pooled bin has expectation >= 5 in both arms
    groups, acc1, acc2, edges = [], 0.0, 0.0, []
    start = 0
    for i in range(len(c1)):
        acc1 += c1[i]
        acc2 += c2[i]
        if acc1 >= 5 and acc2 >= 5:
            groups.append((acc1, acc2))
            edges.append(orig_bins[start])
            acc1 = acc2 = 0.0
            start = i + 1
    if acc1 > 0 or acc2 > 0:
        if groups:
            g1, g2 = groups[-1]
            groups[-1] = (g1 + acc1, g2 + acc2)
        else:
            groups.append((acc1, acc2))
            edges.append(orig_bins[start] if start < len(orig_bins) else 0)
    a = np.array([g[0] for g in groups])
    b = np.array([g[1] for g in groups])
    n1, n2 = a.sum(), b.sum()
    if len(groups) < 2 or n1 == 0 or n2 == 0:
        return 0.0, 0, np.asarray(edges)
    pooled = (a + b) / (n1 + n2)
    e1, e2 = n1 * pooled, n2 * pooled
    chi2 = float((((a - e1) ** 2) / e1).sum() + (((b - e2) ** 2) / e2).sum())
    return chi2, len(groups) - 1, np.asarray(edges)


# ---------------------------------------------------------------------------
# batch export: JSON lines, one object per sample


def write_samples_jsonl(path, batch: VacancyBatch) -> None:
    """One line per sample: ``{"u", "visited_count", "vacancy_bitmap_base64"}``.

    Bit i of the bitmap (big-endian within bytes, numpy packbits order) is 1
    when window point i is vacant.
    """
    with open(path, "w") as fh:
        for row in range(batch.n_samples):
            bits = np.packbits(~batch.visited[row])
            fh.write(json.dumps({
                "u": batch.u,
                "visited_count": int(batch.visited[row].sum()),
                "vacancy_bitmap_base64": base64.b64encode(bits.tobytes()).decode(),
            }) + "\n")


def read_samples_jsonl(path, n_points: int) -> VacancyBatch | None:
    """Inverse of :func:`write_samples_jsonl` (points/trajectory data not stored)."""
    rows, us = [], []
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            raw = np.frombuffer(base64.b64decode(obj["vacancy_bitmap_base64"]), dtype=np.uint8)
            vacant = np.unpackbits(raw)[:n_points].astype(bool)
            if int(obj["visited_count"]) != n_points - int(vacant.sum()):
                raise ValueError("visited_count disagrees with bitmap")
            rows.append(~vacant)
            us.append(float(obj["u"]))
    if not rows:
        return None
    if len(set(us)) != 1:
        raise ValueError("mixed levels in one batch file")
    visited = np.asarray(rows)
    return VacancyBatch(u=us[0], points=np.empty((n_points, 0), dtype=np.int64),
                        visited=visited,
                        n_trajectories=np.full(len(rows), -1),
                        truncation_radius=-1, residual_budget=float("nan"))
