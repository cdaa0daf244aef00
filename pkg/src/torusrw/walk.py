"""Continuous-time simple random walk on the torus: covers, hits, excursions.

The walk holds an independent Exp(1) time at each site and then jumps to one
of its 2d nearest neighbours uniformly.  Entrance times are recorded at jump
arrivals, the start site counts as entered at time 0.

Randomness comes in as either an :class:`~torusrw.rng.RngStream` or a ready
``np.random.Generator``.  Each kernel consumes draws in a fixed documented
order (holding time, then direction), so a given stream key reproduces the
identical path bit for bit; tests rely on replaying that order in numpy.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import SiteSet, TorusGeometry
from .rng import RngStream

__all__ = [
    "HorizonExceededError",
    "HitRecord",
    "HittingResult",
    "ExcursionRecord",
    "sample_step",
    "default_horizon",
    "run_cover",
    "run_bounded",
    "hitting_time",
    "excursions",
    "write_trajectory",
    "read_trajectory",
    "sample_trajectory",
]

# Upper bound on g(0) over all dimensions d >= 1 is not finite (the walk is
# recurrent below d=3), but as a *horizon budget* the d=3 value with a wide
# multiplier covers every d >= 1 at the sizes this package runs; see
# default_horizon.
_G0_BUDGET = 1.517


class HorizonExceededError(RuntimeError):
    """A walk ran out of its time horizon before finishing its job."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"rng must be RngStream or np.random.Generator, got {type(rng)!r}")


def default_horizon(geometry: TorusGeometry, multiplier: float = 50.0) -> float:
    """Default time budget: multiplier * g(0) * N^d * log(N^d)."""
    nd = float(geometry.n_sites)
    return multiplier * _G0_BUDGET * nd * np.log(nd)


def sample_step(geometry: TorusGeometry, site: int, rng):
    """One move of the walk: (holding_time, next_site).

    Draw order matches the kernels: holding time first, then direction.
    """
    gen = _generator(rng)
    hold = float(gen.exponential())
    r = int(gen.integers(0, 2 * geometry.d))
    nxt = int(geometry.neighbors(site)[r])
    return hold, nxt


@dataclass
class HitRecord:
    """First-entrance times of one walk sweep.

    ``hit_times[x]`` is H_x in continuous time, or -1.0 when site x was not
    entered before the walk stopped (treated as +infinity by the queries
    below).
    """

    geometry: TorusGeometry
    start: int
    hit_times: np.ndarray
    covered: bool
    cover_time: float
    t_end: float
    jumps: int
    horizon: float

    def vacant_at(self, t: float) -> np.ndarray:
        """Flat indices not yet entered at time t (H_x > t)."""
        if t > self.t_end:
            raise ValueError(f"t={t} is beyond the simulated span {self.t_end}")
        h = self.hit_times
        return np.nonzero((h < 0.0) | (h > t))[0]

    def n_vacant_at(self, t: float) -> int:
        return int(self.vacant_at(t).size)

    def last_k(self, k: int) -> np.ndarray:
        """The k sites entered last, ordered by decreasing entrance time."""
        if not self.covered:
            raise ValueError("last_k requires a completed cover")
        if not (1 <= k <= self.hit_times.size):
            raise ValueError("k out of range")
        part = np.argpartition(self.hit_times, -k)[-k:]
        return part[np.argsort(-self.hit_times[part], kind="stable")]


def run_cover(geometry: TorusGeometry, start: int, rng, horizon: float | None = None) -> HitRecord:
    """Walk from ``start`` until every torus site has been entered.

    Raises :class:`HorizonExceededError` (with the partial record attached)
    if the horizon is exhausted first — with the default budget that signals
    a bug rather than bad luck.
    """
    rec = run_bounded(geometry, start, rng, default_horizon(geometry) if horizon is None else horizon)
    if not rec.covered:
        raise HorizonExceededError(
            f"cover sweep exhausted horizon {rec.horizon:.3g} with {np.count_nonzero(rec.hit_times < 0)} sites unseen",
            record=rec,
        )
    return rec


def run_bounded(geometry: TorusGeometry, start: int, rng, horizon: float) -> HitRecord:
    """Walk until covered or until the horizon runs out, whichever is first."""
    gen = _generator(rng)
    hits = np.full(geometry.n_sites, -1.0)
    covered, cover_time, t_end, jumps = _kernels.record_first_hits(
        gen, geometry.N, geometry.strides, np.int64(start), float(horizon), hits
    )
    return HitRecord(
        geometry=geometry,
        start=int(start),
        hit_times=hits,
        covered=bool(covered),
        cover_time=float(cover_time),
        t_end=float(t_end),
        jumps=int(jumps),
        horizon=float(horizon),
    )


@dataclass(frozen=True)
class HittingResult:
    time: float
    site: int
    jumps: int

    @property
    def hit(self) -> bool:
        return self.time >= 0.0


def hitting_time(
    geometry: TorusGeometry,
    target: SiteSet,
    start: int,
    rng,
    variant: str = "entrance",
    horizon: float | None = None,
) -> HittingResult:
    """Entrance, return, or exit time of one walk.

    - ``entrance``: H_U, zero if the start is already in the target;
    - ``return``: the first time in the target from the first jump onward;
    - ``exit``: first time outside the target set, zero if already outside.

    A horizon overrun is reported as a non-hit result, not an error.
    """
    if variant not in ("entrance", "return", "exit"):
        raise ValueError(f"unknown variant {variant!r}")
    if len(target) == 0:
        raise ValueError("hitting_time of the empty set is undefined")
    gen = _generator(rng)
    if variant == "exit":
        if len(target) == geometry.n_sites:
            raise ValueError("exit time of the full torus is undefined")
        mask = ~target.mask
        skip = False
    else:
        mask = target.mask
        skip = variant == "return"
    t, site, jumps = _kernels.hit_target(
        gen, geometry.N, geometry.strides, np.int64(start), mask,
        skip, default_horizon(geometry) if horizon is None else float(horizon),
    )
    return HittingResult(time=float(t), site=int(site), jumps=int(jumps))


@dataclass
class ExcursionRecord:
    """Entrance times R_k into the A-set and matching departure times U_k.

    U_k is the first time >= R_k at which the walk has spent the trailing
    open interval of length ``t_star`` entirely outside the C-set.  ``r_times``
    may be one longer than ``u_times`` when the horizon cut an excursion short.
    """

    r_times: np.ndarray
    u_times: np.ndarray
    t_star: float
    horizon: float
    t_end: float

    def n_complete(self, t: float | None = None) -> int:
        """Completed excursions (departures) by time t (default: horizon)."""
        cut = self.horizon if t is None else t
        return int(np.count_nonzero(self.u_times <= cut))


def excursions(
    geometry: TorusGeometry,
    a_set: SiteSet,
    c_set: SiteSet,
    start: int,
    rng,
    t_star: float,
    horizon: float,
    capacity_hint: int = 256,
) -> ExcursionRecord:
    """Excursion decomposition of one walk between A and the complement of C."""
    if len(a_set) == 0 or len(c_set) == 0:
        raise ValueError("A and C must be nonempty")
    if np.any(~c_set.mask[a_set.indices]):
        raise ValueError("A must be contained in C")
    if len(c_set) == geometry.n_sites:
        raise ValueError("C covers the whole torus; no excursions possible")
    if t_star <= 0:
        raise ValueError("t_star must be positive")
    gen = _generator(rng)
    cap = int(capacity_hint)
    while True:
        r_times = np.full(cap, np.inf)
        u_times = np.full(cap, np.inf)
        n_r, n_u, t_end = _kernels.excursion_walk(
            gen, geometry.N, geometry.strides, np.int64(start),
            a_set.mask, c_set.mask, float(t_star), float(horizon), r_times, u_times,
        )
        if n_r < cap and n_u < cap:
            return ExcursionRecord(
                r_times=r_times[:n_r], u_times=u_times[:n_u],
                t_star=float(t_star), horizon=float(horizon), t_end=float(t_end),
            )
        # saturated mid-walk: the path so far is spent, rerun bigger on a
        # fresh pass of the same generator state would bias — so replay from
        # a cloned stream is not possible here; grow and redo from scratch
        # is only valid with a fresh generator.  Callers pass RngStream for
        # that; a bare Generator cannot be rewound.
        if isinstance(rng, RngStream):
            cap *= 4
            gen = rng.generator()
            continue
        raise RuntimeError(
            f"excursion buffers saturated at {cap}; pass a larger capacity_hint or an RngStream"
        )


# ---------------------------------------------------------------------------
# binary trajectory dump
#
# 16-byte little-endian header: magic b'TRW1', u32 d, u32 N, u32 count,
# then `count` records of (site, holding f64) with site u32 when N**d fits
# in 32 bits and u64 otherwise.
# ---------------------------------------------------------------------------

_MAGIC = b"TRW1"


def write_trajectory(path, geometry: TorusGeometry, sites: np.ndarray, holds: np.ndarray):
    """Write a (site, holding-time) trajectory in the binary dump format."""
    sites = np.asarray(sites)
    holds = np.asarray(holds, dtype="<f8")
    if sites.shape != holds.shape:
        raise ValueError("sites and holds must have equal length")
    site_dt = "<u4" if geometry.n_sites < 2**32 else "<u8"
    rec = np.empty(sites.size, dtype=[("site", site_dt), ("hold", "<f8")])
    rec["site"] = sites
    rec["hold"] = holds
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", _MAGIC, geometry.d, geometry.N, sites.size))
        rec.tofile(fh)


def read_trajectory(path):
    """Read a binary trajectory dump -> (geometry, sites, holds)."""
    with open(path, "rb") as fh:
        magic, d, N, count = struct.unpack("<4sIII", fh.read(16))
        if magic != _MAGIC:
            raise ValueError(f"not a trajectory dump (magic {magic!r})")
        geometry = TorusGeometry(int(d), int(N))
        dt = np.dtype([("site", "<u4" if geometry.n_sites < 2**32 else "<u8"), ("hold", "<f8")])
        rec = np.fromfile(fh, dtype=dt, count=count)
    if rec.size != count:
        raise ValueError("trajectory dump truncated")
    return geometry, rec["site"].astype(np.int64), rec["hold"].astype(np.float64)


def sample_trajectory(geometry: TorusGeometry, start: int, n_jumps: int, rng):
    """Simulate and return (sites, holds) over ``n_jumps`` jumps.

    ``holds[k]`` is the full holding time at ``sites[k]``; the last site's
    holding time is drawn even though its jump is not taken.
    """
    gen = _generator(rng)
    sites = np.empty(n_jumps + 1, dtype=np.int64)
    holds = np.empty(n_jumps + 1, dtype=np.float64)
    _kernels.trajectory_walk(gen, geometry.N, geometry.strides, np.int64(start), np.int64(n_jumps), sites, holds)
    return sites, holds
