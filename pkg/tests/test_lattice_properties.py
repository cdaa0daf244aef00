"""Property tests for the site-set algebra and index arithmetic."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from torusrw.lattice import SiteSet, TorusGeometry

geometries = st.sampled_from([TorusGeometry(2, 5), TorusGeometry(3, 4),
                              TorusGeometry(3, 6), TorusGeometry(1, 9)])


def subsets(geo):
    return st.lists(st.integers(0, geo.n_sites - 1), max_size=geo.n_sites)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), geo=geometries)
def test_set_algebra_laws(data, geo):
    a = SiteSet(geo, np.array(data.draw(subsets(geo)), dtype=np.int64))
    b = SiteSet(geo, np.array(data.draw(subsets(geo)), dtype=np.int64))
    assert a.union(b) == b.union(a)
    assert a.intersection(b) == b.intersection(a)
    assert a.difference(b).union(a.intersection(b)) == a
    # De Morgan
    assert a.union(b).complement() == a.complement().intersection(b.complement())
    assert len(a.union(b)) + len(a.intersection(b)) == len(a) + len(b)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), geo=geometries)
def test_index_coords_roundtrip(data, geo):
    idx = np.array(data.draw(subsets(geo)), dtype=np.int64)
    coords = geo.coords_of(idx)
    assert coords.shape == (idx.size, geo.d)
    assert np.array_equal(geo.site_index(coords), idx)
    # wrapping any integer shift of the coords lands on the same sites
    shift = data.draw(st.integers(-3 * geo.N, 3 * geo.N))
    assert np.array_equal(geo.site_index(coords + shift * geo.N), idx)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), geo=geometries)
def test_boundaries_partition_reachability(data, geo):
    raw = data.draw(st.lists(st.integers(0, geo.n_sites - 1), min_size=1,
                             max_size=geo.n_sites - 1))
    s = SiteSet(geo, np.unique(np.array(raw, dtype=np.int64)))
    if len(s) == geo.n_sites:
        return
    inner = s.inner_boundary()
    outer = s.outer_boundary()
    # the boundaries sit on the correct sides of the set
    assert len(inner.difference(s)) == 0
    assert len(outer.intersection(s)) == 0
    # every outer site touches the set; every inner site touches the outside
    for site in outer.indices:
        assert s.contains(geo.neighbors(site)).any()
    for site in inner.indices:
        assert (~s.contains(geo.neighbors(site))).any()
