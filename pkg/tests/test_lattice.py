import numpy as np
import pytest

from torusrw.lattice import (
    BoxSpec,
    SiteSet,
    TorusGeometry,
    box_sites_zd,
    concentric_radii,
    enclosing_radius,
    separation,
)


def test_index_coords_roundtrip():
    geo = TorusGeometry(3, 7)
    idx = np.arange(geo.n_sites)
    assert np.array_equal(geo.site_index(geo.coords_of(idx)), idx)


def test_wraparound_distance():
    geo = TorusGeometry(3, 10)
    # 1 and 9 are distance 2 apart through the wrap, not 8
    assert geo.dist_inf((1, 0, 0), (9, 0, 0)) == 2
    assert geo.dist_inf((0, 0, 0), (5, 5, 5)) == 5


def test_neighbors_count_and_distance():
    geo = TorusGeometry(3, 6)
    nb = geo.neighbors(np.arange(geo.n_sites))
    assert nb.shape == (geo.n_sites, 6)
    c = geo.coords_of(np.arange(geo.n_sites))
    for k in range(6):
        d = geo.dist_inf(c, geo.coords_of(nb[:, k]))
        assert np.all(d == 1)


def test_box_counts_and_boundaries():
    """B(0,1) in d=3 has 27 sites, 26 on its inner and 54 on its outer shell."""
    geo = TorusGeometry(3, 10)
    box = SiteSet.from_boxes(geo, [BoxSpec((0, 0, 0), 1)])
    assert len(box) == 27
    assert len(box.inner_boundary()) == 26
    assert len(box.outer_boundary()) == 54


def test_outer_boundary_matches_bruteforce():
    geo = TorusGeometry(3, 8)
    box = SiteSet.from_boxes(geo, [BoxSpec((1, 2, 3), 2)])
    nb = geo.neighbors(box.indices).ravel()
    expect = np.setdiff1d(np.unique(nb), box.indices)
    assert np.array_equal(box.outer_boundary().indices, expect)


def test_box_sites_zd_is_lexicographic():
    pts = box_sites_zd((0, 0, 0), 2)
    assert pts.shape == (125, 3)
    assert pts[0].tolist() == [-2, -2, -2]
    # strictly increasing in lexicographic order = no duplicates, sorted
    keys = (pts[:, 0] * 10000 + pts[:, 1] * 100 + pts[:, 2])
    assert np.all(np.diff(keys) > 0)


def test_box_wrap_deduplicates():
    # radius >= N/2 floods the torus; the site set must not double-count
    geo = TorusGeometry(3, 4)
    box = SiteSet.from_boxes(geo, [BoxSpec((0, 0, 0), 2)])
    assert len(box) == geo.n_sites


def test_set_algebra():
    geo = TorusGeometry(3, 6)
    a = SiteSet.from_boxes(geo, [BoxSpec((0, 0, 0), 1)])
    b = SiteSet.from_boxes(geo, [BoxSpec((3, 3, 3), 1)])
    assert len(a.union(b)) == 54
    assert len(a.intersection(b)) == 0
    assert a.union(b).difference(b) == a
    assert len(a.complement()) == geo.n_sites - 27
    assert SiteSet.empty(geo).union(a) == a


def test_separation_single_and_pairs():
    geo = TorusGeometry(3, 20)
    assert separation(geo, [(3, 4, 5)]) == geo.N
    assert separation(geo, [(0, 0, 0), (10, 0, 0), (0, 19, 0)]) == 1


def test_enclosing_radius():
    assert enclosing_radius(np.array([[0, 0, 0]])) == 0
    assert enclosing_radius(box_sites_zd((0, 0, 0), 3)) == 3


def test_concentric_radii_frozen():
    assert concentric_radii(100, 0.5) == (10, 31, 49)
    r_a, r_b, r_c = concentric_radii(20, 0.5)
    assert r_a <= r_b <= r_c


def test_concentric_radii_ordering_property():
    for s in (10, 50, 200, 1000):
        for eps in (0.1, 0.3, 0.6):
            r_a, r_b, r_c = concentric_radii(s, eps)
            assert 1 <= r_a <= r_b <= r_c


def test_geometry_validation():
    with pytest.raises(ValueError):
        TorusGeometry(0, 10)
    with pytest.raises(ValueError):
        TorusGeometry(3, 1)
    with pytest.raises(ValueError):
        BoxSpec((0, 0, 0), -1)
