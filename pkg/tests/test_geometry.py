import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robin_nonlocal import InvalidGrid, build_interval, build_rectangle


def test_interval_centers_and_spacing():
    g = build_interval(4, 1.0)
    np.testing.assert_allclose(g.cell_centers[:, 0], [0.125, 0.375, 0.625, 0.875])
    assert g.spacing == (0.25,)
    assert g.cell_volume == 0.25


def test_interval_faces():
    g = build_interval(2, 1.0)
    assert [f.adjacent_cell for f in g.boundary_faces] == [0, 1]
    np.testing.assert_array_equal(g.outward_normals[:, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(g.surface_weights, [1.0, 1.0])


@pytest.mark.parametrize("n", [1, 0, -3])
def test_interval_too_small(n):
    with pytest.raises(InvalidGrid):
        build_interval(n, 1.0)


def test_rectangle_2x2():
    g = build_rectangle(2, 2, 1.0, 1.0)
    assert g.n_cells == 4 and g.n_faces == 8
    np.testing.assert_array_equal(g.surface_weights, np.full(8, 0.5))
    assert g.surface_weights.sum() == 4.0


def test_rectangle_face_lengths():
    g = build_rectangle(3, 2, 3.0, 1.0)
    for f in g.boundary_faces:
        expected = 0.5 if f.side in ("left", "right") else 1.0
        assert f.surface_weight == expected


def test_rectangle_too_small():
    with pytest.raises(InvalidGrid):
        build_rectangle(1, 4)


def test_face_order_and_sides():
    g = build_rectangle(3, 2)
    sides = [f.side for f in g.boundary_faces]
    assert sides == ["left"] * 2 + ["right"] * 2 + ["bottom"] * 3 + ["top"] * 3
    assert g.faces_on("bottom") == [4, 5, 6]


def test_cell_index_roundtrip():
    g = build_rectangle(5, 3)
    for k in range(g.n_cells):
        assert g.cell_index(g.cell_multi_index(k)) == k


def test_snap_tie_goes_to_lower_index():
    g = build_interval(4, 1.0)
    assert g.snap([0.5]) == 1
    assert g.snap([0.0]) == 0
    assert g.snap([1.0]) == 3
    with pytest.raises(InvalidGrid):
        g.snap([1.5])


def test_neighbors_interior_and_corner():
    g = build_rectangle(3, 3)
    assert len(list(g.neighbors(4))) == 4
    assert len(list(g.neighbors(0))) == 2


dims = st.tuples(st.integers(2, 12), st.integers(2, 12),
                 st.floats(0.1, 10.0), st.floats(0.1, 10.0))


@settings(max_examples=40, deadline=None)
@given(dims)
def test_volumes_sum_to_domain(args):
    nx, ny, lx, ly = args
    g = build_rectangle(nx, ny, lx, ly)
    assert g.cell_volume * g.n_cells == pytest.approx(lx * ly, rel=1e-13)
    assert g.surface_weights.sum() == pytest.approx(2 * (lx + ly), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(dims)
def test_normals_point_outward(args):
    nx, ny, lx, ly = args
    g = build_rectangle(nx, ny, lx, ly)
    centers = g.cell_centers
    for f in g.boundary_faces:
        assert np.dot(f.outward_normal, np.asarray(f.face_center) - centers[f.adjacent_cell]) > 0
        mi = g.cell_multi_index(f.adjacent_cell)
        assert mi[0] in (0, nx - 1) or mi[1] in (0, ny - 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 50), st.floats(0.1, 10.0))
def test_interval_volume(n, length):
    g = build_interval(n, length)
    assert g.cell_volume * n == pytest.approx(length, rel=1e-13)
    assert g.domain_volume == pytest.approx(length)
