"""Walk sampling: reproducibility contract, draw order, law checks."""

import numpy as np
import pytest

from torusrw import walk
from torusrw.lattice import BoxSpec, SiteSet, TorusGeometry
from torusrw.rng import RngStream


def test_stream_replays_bit_identical():
    a = RngStream(123, 7).generator().random(100)
    b = RngStream(123, 7).generator().random(100)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(123, 7).generator().random(100)
    b = RngStream(123, 8).generator().random(100)
    c = RngStream(124, 7).generator().random(100)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_key_validation():
    with pytest.raises(ValueError):
        RngStream(-1, 0)
    with pytest.raises(ValueError):
        RngStream(0, 2**64)


def test_run_bounded_matches_numpy_replay():
    """The kernel's draw order (Exp holding, then direction) replayed in numpy.

    This is the reproducibility contract: anyone can reconstruct a path from
    the (seed, stream) key without touching the compiled code.
    """
    geo = TorusGeometry(3, 5)
    horizon = 300.0
    rec = walk.run_bounded(geo, 0, RngStream(42, 3), horizon)

    gen = RngStream(42, 3).generator()
    hits = np.full(geo.n_sites, -1.0)
    pos, t = 0, 0.0
    hits[pos] = 0.0
    coords = geo.coords_of(np.arange(geo.n_sites))
    while True:
        t += gen.exponential()
        if t > horizon:
            break
        r = int(gen.integers(0, 6))
        axis, sign = r >> 1, (1 if r % 2 == 0 else -1)
        c = coords[pos].copy()
        c[axis] = (c[axis] + sign) % geo.N
        pos = int(geo.site_index(c))
        if hits[pos] < 0.0:
            hits[pos] = t
        if not (hits < 0.0).any():
            break
    assert np.array_equal(rec.hit_times, hits)


def test_same_stream_same_record():
    geo = TorusGeometry(3, 6)
    r1 = walk.run_cover(geo, 0, RngStream(9, 1))
    r2 = walk.run_cover(geo, 0, RngStream(9, 1))
    assert np.array_equal(r1.hit_times, r2.hit_times)
    assert r1.jumps == r2.jumps


def test_step_law_moments():
    """Neighbor choice uniform over 2d, holding times Exp(1)."""
    geo = TorusGeometry(3, 7)
    gen = RngStream(0, 0).generator()
    n = 300_000
    holds = np.empty(n)
    targets = np.empty(n, dtype=np.int64)
    for i in range(n // 1000):
        lo = i * 1000
        for j in range(1000):
            h, site = walk.sample_step(geo, 0, gen)
            targets[lo + j] = site
            holds[lo + j] = h
    assert abs(holds.mean() - 1.0) <= 3.0 / np.sqrt(n)
    assert abs(holds.var() - 1.0) <= 3.0 * np.sqrt(8.0 / n)  # Var of Exp^2 moments
    _, counts = np.unique(targets, return_counts=True)
    assert counts.size == 6
    freq = counts / n
    assert np.abs(freq - 1 / 6).max() <= 4 * np.sqrt((1 / 6) * (5 / 6) / n)


def test_cover_record_structure():
    geo = TorusGeometry(3, 5)
    rec = walk.run_cover(geo, 17, RngStream(5, 0))
    assert rec.covered
    assert (rec.hit_times >= 0).all()
    assert rec.hit_times[17] == 0.0
    assert rec.cover_time == rec.hit_times.max()
    assert rec.n_vacant_at(0.0) == geo.n_sites - 1
    # last_k ordering: decreasing entrance times, head is the argmax
    last = rec.last_k(4)
    assert rec.hit_times[last[0]] == rec.cover_time
    assert np.all(np.diff(rec.hit_times[last]) < 0)


def test_vacant_monotone_in_time():
    geo = TorusGeometry(3, 5)
    rec = walk.run_cover(geo, 0, RngStream(5, 1))
    ts = np.linspace(0, rec.cover_time, 7)
    sizes = [rec.n_vacant_at(t) for t in ts]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    with pytest.raises(ValueError):
        rec.vacant_at(rec.t_end + 1.0)


def test_horizon_error_carries_partial_record():
    geo = TorusGeometry(3, 8)
    with pytest.raises(walk.HorizonExceededError) as err:
        walk.run_cover(geo, 0, RngStream(1, 0), horizon=5.0)
    rec = err.value.record
    assert rec is not None
    assert not rec.covered
    assert (rec.hit_times >= 0).sum() >= 1


def test_hitting_variants():
    geo = TorusGeometry(3, 6)
    target = SiteSet.from_boxes(geo, [BoxSpec((0, 0, 0), 1)])
    # entrance from inside is instant
    res = walk.hitting_time(geo, target, 0, RngStream(2, 0))
    assert res.time == 0.0
    # return leaves first, so it is strictly positive
    res = walk.hitting_time(geo, target, 0, RngStream(2, 1), variant="return")
    assert res.hit and res.time > 0.0
    # exit from outside is instant
    outside = int(geo.site_index((3, 3, 3)))
    res = walk.hitting_time(geo, target, outside, RngStream(2, 2), variant="exit")
    assert res.time == 0.0
    with pytest.raises(ValueError):
        walk.hitting_time(geo, SiteSet.empty(geo), 0, RngStream(2, 3))
    full = SiteSet.empty(geo).complement()
    with pytest.raises(ValueError):
        walk.hitting_time(geo, full, 0, RngStream(2, 4), variant="exit")


def test_singleton_entrance_time_is_nearly_exponential(g0):
    """H_x / E[H_x] from uniform starts: KS distance to Exp(1) <= 0.03."""
    geo = TorusGeometry(3, 20)
    target = SiteSet.from_coords(geo, np.array([[0, 0, 0]]))
    horizon = 60.0 * g0 * geo.n_sites
    n = 5000
    times = np.empty(n)
    for i in range(n):
        stream = RngStream(77, i)
        gen = stream.generator()
        start = int(gen.integers(geo.n_sites))
        res = walk.hitting_time(geo, target, start, gen, horizon=horizon)
        assert res.hit
        times[i] = res.time
    x = np.sort(times / times.mean())
    cdf = 1.0 - np.exp(-x)
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    ks = max(np.abs(cdf - emp_hi).max(), np.abs(cdf - emp_lo).max())
    assert ks <= 0.03, f"KS={ks:.4f}"


def test_excursions_synthetic_and_invariants():
    geo = TorusGeometry(3, 10)
    a = SiteSet.from_boxes(geo, [BoxSpec((0, 0, 0), 1)])
    c = SiteSet.from_boxes(geo, [BoxSpec((0, 0, 0), 3)])
    # a walk that never reaches A in a tiny horizon records nothing
    far = int(geo.site_index((5, 5, 5)))
    rec = walk.excursions(geo, a, c, far, RngStream(3, 0), t_star=5.0, horizon=0.5)
    assert rec.n_complete() == 0 and rec.r_times.size == 0

    rec = walk.excursions(geo, a, c, 0, RngStream(3, 1), t_star=20.0, horizon=4000.0)
    assert rec.r_times.size >= 1
    # alternating ladder with the settle-window gap
    n_u = rec.u_times.size
    assert rec.r_times.size in (n_u, n_u + 1)
    for k in range(n_u):
        assert rec.u_times[k] - rec.r_times[k] >= rec.t_star
        if k + 1 < rec.r_times.size:
            assert rec.r_times[k + 1] >= rec.u_times[k]
    assert rec.n_complete(rec.u_times[0]) == 1 if n_u else True

    with pytest.raises(ValueError):
        walk.excursions(geo, c, a, 0, RngStream(3, 2), t_star=5.0, horizon=10.0)  # A not in C
    with pytest.raises(ValueError):
        walk.excursions(geo, a, c, 0, RngStream(3, 3), t_star=0.0, horizon=10.0)


def test_trajectory_roundtrip(tmp_path):
    geo = TorusGeometry(3, 6)
    sites, holds = walk.sample_trajectory(geo, 4, 200, RngStream(8, 0))
    path = tmp_path / "traj.bin"
    walk.write_trajectory(path, geo, sites, holds)
    geo2, sites2, holds2 = walk.read_trajectory(path)
    assert geo2.N == geo.N and geo2.d == geo.d
    assert np.array_equal(sites, sites2)
    assert np.array_equal(holds, holds2)
    # consecutive sites are lattice neighbors
    c = geo.coords_of(sites)
    d = geo.dist_inf(c[1:], c[:-1])
    assert np.all(d == 1)
