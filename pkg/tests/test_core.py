import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadic_morrey.core.array_packer import decode_doubles, encode_doubles
from dyadic_morrey.core.cubes import (GridGeometry, children, cube, from_blocks, parent_cube,
                                      to_blocks)
from dyadic_morrey.core.grid import GridFunction, cube_mean, cube_means, pairing
from dyadic_morrey.core.splitmix import SplitMix64
from dyadic_morrey.errors import DomainRangeError, ParameterError, ParseError, ShapeMismatchError


def test_cube_measure_and_corner():
    q = cube(2, 1, 3)
    assert q.measure == pytest.approx(1.0 / 16.0)
    assert q.side_length == 0.25
    assert q.corner == (0.25, 0.75)


def test_negative_level_cube_is_large():
    q = cube(-1, 0)
    assert q.measure == 2.0


def test_nesting_and_disjointness():
    big, small = cube(1, 1), cube(3, 5)
    assert big.contains(small)
    assert not small.contains(big)
    assert cube(2, 0).is_disjoint(cube(2, 1))
    assert not big.is_disjoint(small)


def test_parent_and_children_are_consistent(plane):
    q = cube(2, 3, 1)
    parent = parent_cube(q, 1, plane)
    assert parent == cube(1, 1, 0)
    assert q in children(parent, plane)
    assert len(children(parent, plane)) == 4
    assert parent_cube(q, 2).measure == 4 ** 2 * q.measure


def test_parent_beyond_base_cube_raises(plane):
    with pytest.raises(DomainRangeError):
        parent_cube(cube(1, 0, 0), 2, plane)
    with pytest.raises(ParameterError):
        parent_cube(cube(1, 0, 0), -1)


def test_geometry_validation():
    with pytest.raises(ParameterError):
        GridGeometry.create(0, 0, 3)
    with pytest.raises(ParameterError):
        GridGeometry.create(1, 4, 3)


def test_geometry_counts(plane, shifted):
    assert plane.cell_count == 64
    assert plane.cube_count(1) == 4
    assert list(plane.haar_levels) == [0, 1, 2]
    assert shifted.base_cube.measure == 2.0
    assert shifted.cell_measure == 2.0 ** -4
    assert shifted.cubes_per_axis(0) == 2


def test_check_cube_rejects_outside(line):
    with pytest.raises(DomainRangeError):
        line.check_cube(cube(2, 4))
    with pytest.raises(DomainRangeError):
        line.check_level(7)


def test_cube_order_is_lexicographic(plane):
    assert [q.index for q in plane.cubes(1)] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    for flat, q in enumerate(plane.cubes(2)):
        assert plane.flat_index(q) == flat
        assert plane.cube_at(2, flat) == q


def test_block_view_rows_match_cube_slices(plane):
    values = np.arange(plane.cell_count, dtype=float)
    blocks = plane.block_view(values, 1)
    array = values.reshape(plane.shape)
    for flat, q in enumerate(plane.cubes(1)):
        assert np.array_equal(blocks[flat], array[plane.cube_slices(q)].reshape(-1))
    assert np.array_equal(plane.from_block_view(blocks, 1), values)


def test_to_blocks_inverts():
    array = np.arange(64.0).reshape(8, 8)
    assert np.array_equal(from_blocks(to_blocks(array, 4), 4, 2), array)


def test_grid_function_shape_checked(line):
    with pytest.raises(ShapeMismatchError):
        GridFunction(line, np.zeros(10))


def test_grid_function_is_immutable(line):
    f = GridFunction.constant(line, 2.0)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_arithmetic_rejects_other_geometry(line, shifted):
    with pytest.raises(ShapeMismatchError):
        GridFunction.zeros(line) + GridFunction.zeros(shifted)


def test_indicator_means_and_pairing(line):
    q = cube(2, 1)
    chi = GridFunction.indicator(line, q)
    assert cube_mean(chi, q) == 1.0
    assert cube_mean(chi, cube(1, 0)) == 0.5
    assert np.allclose(cube_means(chi, 2), [0.0, 1.0, 0.0, 0.0])
    assert pairing(chi, chi) == pytest.approx(q.measure)


def test_evaluate(shifted):
    f = GridFunction(shifted, np.arange(shifted.cell_count, dtype=float))
    assert f.evaluate([0.0]) == 0.0
    assert f.evaluate([1.99]) == shifted.cell_count - 1
    with pytest.raises(DomainRangeError):
        f.evaluate([2.0])


def test_splitmix_reference_stream():
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF


@given(st.integers(min_value=0, max_value=2 ** 64 - 1), st.integers(min_value=1, max_value=40))
@settings(max_examples=50)
def test_splitmix_vector_matches_scalar(seed, size):
    scalar = SplitMix64(seed)
    expected = [scalar.next_u64() for _ in range(size)]
    vector = SplitMix64(seed)
    assert [int(x) for x in vector.next_u64_array(size)] == expected
    assert vector.state == scalar.state


def test_splitmix_ranges():
    rng = SplitMix64(3)
    u = rng.uniform(1000, -1.0, 1.0)
    assert u.min() >= -1.0 and u.max() < 1.0
    k = rng.integers(1000, 7)
    assert k.min() >= 0 and k.max() < 7


def test_payload_rejects_wrong_length():
    text = encode_doubles([1.0, 2.0, 3.0])
    assert decode_doubles(text, 3) == (1.0, 2.0, 3.0)
    with pytest.raises(ParseError):
        decode_doubles(text, 4)
    with pytest.raises(ParseError):
        decode_doubles("not base64!")


@pytest.mark.parametrize('n, j_min, J', [(1, 0, 4), (1, -1, 3), (2, 0, 2)])
def test_cubes_nest_or_are_disjoint(n, j_min, J):
    g = GridGeometry.create(n, j_min, J)
    cubes = list(g.all_cubes())
    masks = {q: GridFunction.indicator(g, q).values.astype(bool) for q in cubes}
    for p in cubes:
        for q in cubes:
            overlap = np.logical_and(masks[p], masks[q])
            disjoint, inside, outside = not overlap.any(), q.contains(p), p.contains(q)
            assert disjoint == p.is_disjoint(q)
            assert inside == np.array_equal(overlap, masks[p])
            assert outside == np.array_equal(overlap, masks[q])
            if p == q:
                assert inside and outside and not disjoint
            else:
                assert disjoint + inside + outside == 1


def test_ancestors_compose(plane):
    for q in plane.cubes(3):
        for a in range(4):
            for b in range(4 - a):
                assert parent_cube(q, a + b) == parent_cube(parent_cube(q, a), b)
    assert parent_cube(cube(3, 5, 2), 0) == cube(3, 5, 2)


def test_cube_mean_is_normalized_pairing(shifted, rng):
    f = GridFunction(shifted, rng.uniform(shifted.cell_count, -1.0, 1.0))
    for q in shifted.all_cubes():
        assert cube_mean(f, q) == pytest.approx(pairing(f, GridFunction.indicator(shifted, q)) / q.measure,
                                                rel=1e-12, abs=1e-14)


def test_refine_keeps_values(plane):
    coarse = GridGeometry.create(2, 0, 1)
    f = GridFunction(coarse, [1.0, 2.0, 3.0, 4.0])
    fine = f.refine(plane)
    assert fine.geometry == plane
    for q, value in zip(coarse.cubes(1), f.values):
        assert np.all(fine.on_cube(q) == value)
        assert cube_mean(fine, q) == value
    assert f.refine(coarse).values.tolist() == f.values.tolist()
    with pytest.raises(ShapeMismatchError):
        fine.refine(coarse)
    with pytest.raises(ShapeMismatchError):
        f.refine(GridGeometry.create(1, 0, 4))
