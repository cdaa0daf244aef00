"""Statistical harness: limit-law experiments at desk scale.

Each runner takes an :class:`ExperimentConfig`, spreads independent trials
over a thread pool (one counter-based RNG stream per trial, merged by trial
index, so results do not depend on the thread count), and returns a report
object with the raw per-trial data plus the summaries the output layer
serializes.

The normalizing constant g(0) enters every time scale.  For d=3 the pinned
reference value is used (the potential module verifies its own solve against
it); other dimensions trigger a Green-table build on first use.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import walk
from .lattice import BoxSpec, SiteSet, TorusGeometry, box_sites_zd, separation
from .potential import G0_D3_REFERENCE, equilibrium_measure, green
from .rng import RngStream

__all__ = [
    "ExperimentConfig",
    "GumbelFit",
    "VacancyTorusReport",
    "LatePointReport",
    "LastPointsReport",
    "LastKReport",
    "HittingTimeReport",
    "ExcursionReport",
    "run_gumbel",
    "vacancy_experiment",
    "run_late_points",
    "run_last_points",
    "run_last_k_separation",
    "run_hitting_time_check",
    "run_excursion_calibration",
    "g0_for",
    "gumbel_mean",
    "gumbel_variance",
]

gumbel_mean = float(np.euler_gamma)
gumbel_variance = math.pi**2 / 6.0

_G0_CACHE: dict[int, float] = {3: G0_D3_REFERENCE}


def g0_for(d: int) -> float:
    """g(0) used in time normalizations (cached; solved on demand for d != 3)."""
    if d not in _G0_CACHE:
        _G0_CACHE[d] = green(d).g0
    return _G0_CACHE[d]


@dataclass(frozen=True)
class ExperimentConfig:
    """Run parameters shared by the experiment runners.

    ``target`` selects the site family F: the string ``"torus"``, the string
    ``"singletons:<n>"`` for n deterministically placed far-apart sites, or
    an explicit coordinate array.  ``threads``, ``out_path`` and
    ``out_format`` describe execution/serialization and are excluded from
    serialized config blocks so identical runs give identical files.
    """

    N: int
    d: int = 3
    target: str | tuple | np.ndarray = "torus"
    trials: int = 1000
    master_seed: int = 0
    threads: int = 1
    horizon_multiplier: float = 50.0
    z_grid: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0, 3.0)
    rho: float = 0.25
    u_levels: tuple = (0.5, 1.0, 2.0, 4.0)
    keep_hit_times: bool = False
    out_path: str | None = None
    out_format: str = "json"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        z = np.asarray(self.z_grid, dtype=float)
        if z.size and (not np.all(np.isfinite(z)) or np.any(np.diff(z) <= 0)):
            raise ValueError("z_grid must be finite and strictly increasing")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def geometry(self) -> TorusGeometry:
        return TorusGeometry(self.d, self.N)

    def serializable(self) -> dict:
        """Config block for output files — execution details excluded."""
        tgt = self.target
        if isinstance(tgt, np.ndarray):
            tgt = tgt.tolist()
        return {
            "N": self.N,
            "d": self.d,
            "target": tgt,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "horizon_multiplier": self.horizon_multiplier,
            "z_grid": list(map(float, self.z_grid)),
            "rho": self.rho,
            "u_levels": list(map(float, self.u_levels)),
            "keep_hit_times": self.keep_hit_times,
        }


def resolve_target(config: ExperimentConfig) -> SiteSet | None:
    """The site family F; ``None`` means the full torus."""
    geo = config.geometry
    tgt = config.target
    if isinstance(tgt, str):
        if tgt == "torus":
            return None
        if tgt.startswith("singletons:"):
            n = int(tgt.split(":", 1)[1])
            return _placed_singletons(geo, n)
        raise ValueError(f"unknown target spec {tgt!r}")
    return SiteSet.from_coords(geo, np.asarray(tgt, dtype=np.int64) % geo.N)


def _placed_singletons(geo: TorusGeometry, n: int) -> SiteSet:
    """n sites on a coarse sublattice — deterministic, pairwise far apart."""
    if n < 1:
        raise ValueError("need n >= 1 singletons")
    per_axis = math.ceil(n ** (1.0 / geo.d))
    if per_axis > geo.N:
        raise ValueError("more singletons than lattice columns")
    step = geo.N // per_axis
    coords = []
    for flat in range(n):
        c, rest = [], flat
        for _ in range(geo.d):
            c.append((rest % per_axis) * step)
            rest //= per_axis
        coords.append(c)
    return SiteSet.from_coords(geo, np.asarray(coords, dtype=np.int64))


def _run_trials(config: ExperimentConfig, one_trial: Callable[[int, RngStream], object]) -> list:
    """Dispatch trials over the pool; slot results by trial index."""
    out = [None] * config.trials
    if config.threads == 1:
        for i in range(config.trials):
            out[i] = one_trial(i, RngStream(config.master_seed, i))
        return out
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = {
            pool.submit(one_trial, i, RngStream(config.master_seed, i)): i
            for i in range(config.trials)
        }
        for fut, i in futures.items():
            out[i] = fut.result()
    return out


# ---------------------------------------------------------------------------
# Gumbel fluctuations of the cover time


@dataclass
class GumbelFit:
    """Normalized cover-time sample and its distance to the Gumbel limit."""

    config: ExperimentConfig
    values: np.ndarray            # C_F/(g0 N^d) - ln|F|, completed trials only
    cover_times: np.ndarray
    n_flagged: int                # trials that exhausted the horizon
    f_size: int

    @property
    def ks_distance(self) -> float:
        z = np.sort(self.values)
        n = z.size
        cdf = np.exp(-np.exp(-z))
        hi = np.abs(cdf - np.arange(1, n + 1) / n).max()
        lo = np.abs(cdf - np.arange(0, n) / n).max()
        return float(max(hi, lo))

    @property
    def sample_mean(self) -> float:
        return float(self.values.mean())

    @property
    def sample_variance(self) -> float:
        return float(self.values.var(ddof=1))

    @property
    def se_mean(self) -> float:
        return float(self.values.std(ddof=1) / np.sqrt(self.values.size))

    def iid_prediction(self, z: np.ndarray) -> np.ndarray:
        """(1 - e^{-z}/n)^n — the i.i.d. exponential-entrance prediction."""
        n = self.f_size
        base = np.maximum(1.0 - np.exp(-np.asarray(z, dtype=float)) / n, 0.0)
        return base**n

    def summary(self) -> dict:
        return {
            "f_size": self.f_size,
            "n_completed": int(self.values.size),
            "n_flagged": self.n_flagged,
            "ks_distance": self.ks_distance,
            "sample_mean": self.sample_mean,
            "sample_variance": self.sample_variance,
            "se_mean": self.se_mean,
            "gumbel_mean": gumbel_mean,
            "gumbel_variance": gumbel_variance,
        }

    def rows(self) -> list[dict]:
        rows, j = [], 0
        for i, c in enumerate(self.cover_times):
            flagged = not np.isfinite(c)
            rows.append({
                "trial": i,
                "cover_time": "" if flagged else repr(float(c)),
                "normalized": "" if flagged else repr(float(self.values[j])),
                "flagged": int(flagged),
            })
            if not flagged:
                j += 1
        return rows


def run_gumbel(config: ExperimentConfig) -> GumbelFit:
    """M independent cover times of the target family, Gumbel-normalized.

    The normalization is C_F / (g0 N^d) - ln|F|; a trial that exhausts its
    horizon before covering F is excluded from the sample and counted in
    ``n_flagged``.
    """
    geo = config.geometry
    f_set = resolve_target(config)
    f_size = geo.n_sites if f_set is None else len(f_set)
    if f_size < 1:
        raise ValueError("empty target family")
    g0 = g0_for(config.d)
    scale = g0 * geo.n_sites
    horizon = config.horizon_multiplier * scale * max(math.log(f_size), 1.0)
    f_idx = None if f_set is None else f_set.indices

    def one(i: int, stream: RngStream):
        rec = walk.run_bounded(geo, 0, stream, horizon)
        if f_idx is None:
            return rec.cover_time if rec.covered else math.nan
        hf = rec.hit_times[f_idx]
        return float(hf.max()) if (hf >= 0).all() else math.nan

    covers = np.asarray(_run_trials(config, one), dtype=float)
    done = np.isfinite(covers)
    values = covers[done] / scale - math.log(f_size)
    return GumbelFit(config=config, values=values, cover_times=covers,
                     n_flagged=int((~done).sum()), f_size=f_size)


# ---------------------------------------------------------------------------
# one- and two-point vacancy on the torus


@dataclass
class VacancyTorusReport:
    config: ExperimentConfig
    u: float
    vacant_one: np.ndarray      # bool per trial: site x1 untouched by time u N^d
    vacant_pair: np.ndarray     # bool per trial: x1 and x2 both untouched
    pair_distance: int

    @property
    def p_one(self) -> float:
        return float(self.vacant_one.mean())

    @property
    def p_pair(self) -> float:
        return float(self.vacant_pair.mean())

    def se(self, p: float) -> float:
        return float(np.sqrt(p * (1 - p) / self.vacant_one.size))

    def predicted_one(self) -> float:
        return math.exp(-self.u / g0_for(self.config.d))

    def predicted_pair(self) -> float:
        return self.predicted_one() ** 2

    def summary(self) -> dict:
        return {
            "u": self.u,
            "p_one": self.p_one,
            "se_one": self.se(self.p_one),
            "predicted_one": self.predicted_one(),
            "p_pair": self.p_pair,
            "se_pair": self.se(self.p_pair),
            "predicted_pair": self.predicted_pair(),
            "pair_distance": self.pair_distance,
            "trials": int(self.vacant_one.size),
        }

    def rows(self) -> list[dict]:
        return [
            {"trial": i, "u": self.u, "vacant_one": int(a), "vacant_pair": int(b)}
            for i, (a, b) in enumerate(zip(self.vacant_one, self.vacant_pair))
        ]


def vacancy_experiment(config: ExperimentConfig, u: float) -> VacancyTorusReport:
    """P[site untouched by time u N^d] from stationary starts, with a far pair.

    Site x1 is the origin; x2 sits N/2 away along the first axis (distance
    >= N/4 as required for the near-independence comparison).  Each trial is
    one walk from a uniform start run for continuous time u N^d.
    """
    if u <= 0:
        raise ValueError("u must be > 0")
    geo = config.geometry
    horizon = u * geo.n_sites
    x1 = 0
    x2 = geo.site_index(np.array([[geo.N // 2] + [0] * (geo.d - 1)]))[0]

    def one(i: int, stream: RngStream):
        gen = stream.generator()
        start = int(gen.integers(geo.n_sites))
        rec = walk.run_bounded(geo, start, gen, horizon)
        return bool(rec.hit_times[x1] < 0), bool(rec.hit_times[x1] < 0 and rec.hit_times[x2] < 0)

    res = _run_trials(config, one)
    v1 = np.array([a for a, _ in res])
    vp = np.array([b for _, b in res])
    return VacancyTorusReport(config=config, u=float(u), vacant_one=v1,
                              vacant_pair=vp, pair_distance=geo.N // 2)


# ---------------------------------------------------------------------------
# late points


@dataclass
class LatePointReport:
    config: ExperimentConfig
    t_rho: float
    f_size: int
    sizes: np.ndarray
    min_separations: np.ndarray   # d_inf, N when fewer than two points
    good: np.ndarray              # bool per trial

    @property
    def target_size(self) -> float:
        return self.f_size**self.config.rho

    @property
    def size_window(self) -> float:
        return self.f_size ** (2.0 * self.config.rho / 3.0)

    @property
    def separation_floor(self) -> float:
        return self.f_size ** (1.0 / (2 * self.config.d))

    @property
    def mean_ratio(self) -> float:
        return float(self.sizes.mean() / self.target_size)

    @property
    def good_fraction(self) -> float:
        return float(self.good.mean())

    def summary(self) -> dict:
        return {
            "rho": self.config.rho,
            "t_rho": self.t_rho,
            "f_size": self.f_size,
            "mean_size": float(self.sizes.mean()),
            "var_size": float(self.sizes.var(ddof=1)),
            "target_size": self.target_size,
            "mean_ratio": self.mean_ratio,
            "size_window": self.size_window,
            "separation_floor": self.separation_floor,
            "good_fraction": self.good_fraction,
            "trials": int(self.sizes.size),
        }

    def rows(self) -> list[dict]:
        return [
            {"trial": i, "size": int(s), "min_separation": float(m), "good": int(g)}
            for i, (s, m, g) in enumerate(zip(self.sizes, self.min_separations, self.good))
        ]


def run_late_points(config: ExperimentConfig) -> LatePointReport:
    """Sites of F still unvisited at t(rho) = (1-rho) g0 N^d ln|F|.

    A trial's late set is *good* when its cardinality is within |F|^(2rho/3)
    of |F|^rho and its minimum pairwise distance is at least |F|^(1/2d).
    """
    geo = config.geometry
    f_set = resolve_target(config)
    f_idx = np.arange(geo.n_sites) if f_set is None else f_set.indices
    f_size = f_idx.size
    g0 = g0_for(config.d)
    t_rho = (1.0 - config.rho) * g0 * geo.n_sites * math.log(f_size)

    def one(i: int, stream: RngStream):
        rec = walk.run_bounded(geo, 0, stream, t_rho)
        late = f_idx[rec.hit_times[f_idx] < 0]
        sep = separation(geo, geo.coords_of(late)) if late.size else float("inf")
        return late.size, sep

    res = _run_trials(config, one)
    sizes = np.array([s for s, _ in res], dtype=np.int64)
    seps = np.array([m for _, m in res], dtype=float)
    rep = LatePointReport(config=config, t_rho=t_rho, f_size=f_size,
                          sizes=sizes, min_separations=seps,
                          good=np.zeros(sizes.size, dtype=bool))
    good = (np.abs(sizes - rep.target_size) <= rep.size_window) & (seps >= rep.separation_floor)
    rep.good = good
    return rep


# ---------------------------------------------------------------------------
# point process of last-covered vertices


@dataclass
class LastPointsReport:
    config: ExperimentConfig
    counts: np.ndarray            # (trials, n_z)
    subbox_counts: np.ndarray     # (trials, n_z, 2^d)
    scaled_positions: list | None # per trial, per z: (k, d) arrays x/N, optional

    @property
    def z_grid(self) -> np.ndarray:
        return np.asarray(self.config.z_grid, dtype=float)

    def intensity(self, z: float) -> float:
        return math.exp(-z)

    def mean_count(self, j: int) -> float:
        return float(self.counts[:, j].mean())

    def p_empty(self, j: int) -> float:
        return float((self.counts[:, j] == 0).mean())

    def summary(self) -> dict:
        out = {"trials": int(self.counts.shape[0]), "per_z": []}
        for j, z in enumerate(self.z_grid):
            c = self.counts[:, j]
            out["per_z"].append({
                "z": float(z),
                "intensity": self.intensity(z),
                "mean_count": float(c.mean()),
                "var_count": float(c.var(ddof=1)),
                "se_mean": float(c.std(ddof=1) / np.sqrt(c.size)),
                "p_empty": float((c == 0).mean()),
                "predicted_p_empty": math.exp(-self.intensity(z)),
                "subbox_pooled_histogram": np.bincount(
                    self.subbox_counts[:, j, :].ravel()).tolist(),
            })
        return out

    def rows(self) -> list[dict]:
        zs = self.z_grid
        rows = []
        for i in range(self.counts.shape[0]):
            row = {"trial": i}
            for j, z in enumerate(zs):
                row[f"count_z{z:g}"] = int(self.counts[i, j])
            rows.append(row)
        return rows


def run_last_points(config: ExperimentConfig) -> LastPointsReport:
    """Counts of not-yet-covered vertices at times g0 N^d (ln N^d + z).

    Within one trial the same hit-time record is thinned at every z, so the
    counts are monotone in z by construction.  Sub-box counts split the torus
    into 2^d congruent half-side boxes.
    """
    geo = config.geometry
    g0 = g0_for(config.d)
    zs = np.asarray(config.z_grid, dtype=float)
    t_z = g0 * geo.n_sites * (math.log(geo.n_sites) + zs)
    if (t_z <= 0).any():
        raise ValueError("z_grid reaches non-positive times at this N")
    coords = geo.coords_of(np.arange(geo.n_sites))
    half = geo.N // 2
    box_id = np.zeros(geo.n_sites, dtype=np.int64)
    for k in range(geo.d):
        box_id = box_id * 2 + (coords[:, k] >= half)
    horizon = config.horizon_multiplier * g0 * geo.n_sites * math.log(geo.n_sites)

    def one(i: int, stream: RngStream):
        rec = walk.run_cover(geo, 0, stream, horizon)
        h = rec.hit_times
        counts = np.empty(zs.size, dtype=np.int64)
        sub = np.zeros((zs.size, 2**geo.d), dtype=np.int64)
        pos = [] if config.keep_hit_times else None
        for j, t in enumerate(t_z):
            vac = np.nonzero(h > t)[0]
            counts[j] = vac.size
            sub[j] = np.bincount(box_id[vac], minlength=2**geo.d)
            if pos is not None:
                pos.append(coords[vac] / geo.N)
        return counts, sub, pos

    res = _run_trials(config, one)
    counts = np.stack([c for c, _, _ in res])
    sub = np.stack([s for _, s, _ in res])
    positions = [p for _, _, p in res] if config.keep_hit_times else None
    return LastPointsReport(config=config, counts=counts, subbox_counts=sub,
                            scaled_positions=positions)


# ---------------------------------------------------------------------------
# separation of the last k vertices


@dataclass
class LastKReport:
    config: ExperimentConfig
    k: int
    min_dist_scaled: np.ndarray       # min pairwise d_inf / N per trial
    oracle_min_dist_scaled: np.ndarray  # same statistic for k iid uniform sites

    def tail(self, delta: float, oracle: bool = False) -> float:
        x = self.oracle_min_dist_scaled if oracle else self.min_dist_scaled
        return float((x <= delta).mean())

    def summary(self, deltas=(0.05, 0.1, 0.2, 0.3, 0.5)) -> dict:
        return {
            "k": self.k,
            "trials": int(self.min_dist_scaled.size),
            "tails": [
                {"delta": d, "p_hat": self.tail(d), "oracle": self.tail(d, oracle=True)}
                for d in deltas
            ],
            "mean": float(self.min_dist_scaled.mean()),
            "oracle_mean": float(self.oracle_min_dist_scaled.mean()),
        }

    def rows(self) -> list[dict]:
        return [
            {"trial": i, "min_dist_scaled": repr(float(v)), "oracle_min_dist_scaled": repr(float(o))}
            for i, (v, o) in enumerate(zip(self.min_dist_scaled, self.oracle_min_dist_scaled))
        ]


def run_last_k_separation(config: ExperimentConfig, k: int) -> LastKReport:
    """Minimum pairwise distance (over N) among the last k covered vertices.

    The oracle arm draws k i.i.d. uniform torus sites per trial — the
    separation statistic the limiting picture predicts — from an independent
    substream of the same master seed.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    geo = config.geometry
    if k > geo.n_sites:
        raise ValueError("k exceeds the number of torus sites")

    def one(i: int, stream: RngStream):
        rec = walk.run_cover(geo, 0, stream,
                             walk.default_horizon(geo, config.horizon_multiplier))
        last = rec.last_k(k)
        # per-trial oracle substream, offset past any plausible trial count
        gen = stream.child(10**6 + i).generator()
        unif = gen.integers(0, geo.n_sites, size=k)
        return (separation(geo, geo.coords_of(last)) / geo.N,
                separation(geo, geo.coords_of(unif)) / geo.N)

    res = _run_trials(config, one)
    return LastKReport(
        config=config, k=k,
        min_dist_scaled=np.array([a for a, _ in res]),
        oracle_min_dist_scaled=np.array([b for _, b in res]),
    )


# ---------------------------------------------------------------------------
# expected hitting time vs. capacity


@dataclass
class HittingTimeReport:
    config: ExperimentConfig
    boxes: list
    hit_times: np.ndarray
    total_capacity: float
    capacity_halfwidth: float

    @property
    def mean_hit(self) -> float:
        return float(self.hit_times.mean())

    @property
    def ratio(self) -> float:
        return self.mean_hit * self.total_capacity / self.config.geometry.n_sites

    @property
    def ratio_ci_halfwidth(self) -> float:
        se = self.hit_times.std(ddof=1) / math.sqrt(self.hit_times.size)
        return float(1.96 * se * self.total_capacity / self.config.geometry.n_sites)

    def summary(self) -> dict:
        return {
            "boxes": [{"center": list(map(int, b.center)), "radius": b.radius} for b in self.boxes],
            "trials": int(self.hit_times.size),
            "mean_hit_time": self.mean_hit,
            "total_capacity": self.total_capacity,
            "capacity_halfwidth": self.capacity_halfwidth,
            "ratio": self.ratio,
            "ratio_ci_halfwidth": self.ratio_ci_halfwidth,
        }

    def rows(self) -> list[dict]:
        return [{"trial": i, "hit_time": repr(float(t))} for i, t in enumerate(self.hit_times)]


def run_hitting_time_check(config: ExperimentConfig, boxes: Sequence[BoxSpec],
                           r_env: int = 32) -> HittingTimeReport:
    """Mean entrance time of a union of boxes from uniform starts, times cap/N^d.

    The capacity of each box comes from the potential module's exact solve;
    congruent boxes share one solve.  The full torus as target is rejected
    (entrance time identically zero makes the ratio degenerate).
    """
    geo = config.geometry
    boxes = list(boxes)
    target = SiteSet.from_boxes(geo, boxes)
    if len(target) >= geo.n_sites:
        raise ValueError("target covers the whole torus; hitting time degenerate")
    if sum(len(b.sites(geo)) for b in boxes) != len(target):
        raise ValueError("boxes overlap")
    caps = {}
    total_cap, half = 0.0, 0.0
    for b in boxes:
        if b.radius not in caps:
            caps[b.radius] = equilibrium_measure(box_sites_zd([0] * geo.d, b.radius),
                                                 r_env=r_env)
        total_cap += caps[b.radius].cap_mid
        half += caps[b.radius].cap_err
    horizon = walk.default_horizon(geo, config.horizon_multiplier)

    def one(i: int, stream: RngStream):
        gen = stream.generator()
        start = int(gen.integers(geo.n_sites))
        res = walk.hitting_time(geo, target, start, gen, variant="entrance",
                                horizon=horizon)
        if not res.hit:
            raise walk.HorizonExceededError("hitting trial exhausted its horizon")
        return res.time

    times = np.asarray(_run_trials(config, one), dtype=float)
    return HittingTimeReport(config=config, boxes=boxes, hit_times=times,
                             total_capacity=total_cap, capacity_halfwidth=half)


# ---------------------------------------------------------------------------
# excursion counts vs. u n cap(A)


@dataclass
class ExcursionReport:
    config: ExperimentConfig
    u: float
    a_radius: int
    c_radius: int
    t_star: float
    n_boxes: int
    capacity: float               # cap of one A-box
    counts: np.ndarray            # complete excursions by time u N^d, per trial

    @property
    def predicted(self) -> float:
        return self.u * self.n_boxes * self.capacity

    @property
    def ratio(self) -> float:
        if self.predicted == 0.0:
            return math.nan
        return float(self.counts.mean() / self.predicted)

    @property
    def ratio_ci_halfwidth(self) -> float:
        if self.predicted == 0.0:
            return math.nan
        return float(1.96 * self.counts.std(ddof=1) / math.sqrt(self.counts.size) / self.predicted)

    def summary(self) -> dict:
        return {
            "u": self.u,
            "a_radius": self.a_radius,
            "c_radius": self.c_radius,
            "t_star": self.t_star,
            "n_boxes": self.n_boxes,
            "capacity_one_box": self.capacity,
            "mean_count": float(self.counts.mean()),
            "predicted_count": self.predicted,
            "ratio": self.ratio,
            "ratio_ci_halfwidth": self.ratio_ci_halfwidth,
            "trials": int(self.counts.size),
        }

    def rows(self) -> list[dict]:
        return [{"trial": i, "n_complete": int(c)} for i, c in enumerate(self.counts)]


def run_excursion_calibration(config: ExperimentConfig, centers: Sequence,
                              a_radius: int, c_radius: int, u: float,
                              t_star: float | None = None,
                              r_env: int = 32) -> ExcursionReport:
    """Complete excursion count between the A-boxes and their C-envelopes.

    By continuous time u N^d the walk should complete about u * n * cap(A)
    excursions.  ``t_star`` is the settle window a departure must stay clear
    of the C-union before the excursion counts as complete.  The default
    N^2/(2n) balances two finite-N effects that the asymptotic scale
    separation suppresses: a window much shorter than the diffusive scale
    splits one visit cluster into several excursions, while one comparable
    to the mean inter-visit gap (N^d / (n cap A)) merges distinct visits.
    """
    if u < 0:
        raise ValueError("u must be >= 0")
    geo = config.geometry
    centers = [tuple(map(int, c)) for c in centers]
    if t_star is None:
        t_star = geo.N**2 / (2.0 * len(centers))
    a_boxes = [BoxSpec(c, a_radius) for c in centers]
    c_boxes = [BoxSpec(c, c_radius) for c in centers]
    a_set = SiteSet.from_boxes(geo, a_boxes)
    c_set = SiteSet.from_boxes(geo, c_boxes)
    if sum(len(b.sites(geo)) for b in c_boxes) != len(c_set):
        raise ValueError("C-boxes overlap")
    eq = equilibrium_measure(box_sites_zd([0] * geo.d, a_radius), r_env=r_env)
    horizon = u * geo.n_sites

    def one(i: int, stream: RngStream):
        gen = stream.generator()
        start = int(gen.integers(geo.n_sites))
        rec = walk.excursions(geo, a_set, c_set, start, gen, t_star, horizon)
        return rec.n_complete()

    counts = np.asarray(_run_trials(config, one), dtype=np.int64)
    return ExcursionReport(config=config, u=float(u), a_radius=a_radius,
                           c_radius=c_radius, t_star=float(t_star),
                           n_boxes=len(centers), capacity=eq.cap_mid,
                           counts=counts)
