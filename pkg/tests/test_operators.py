import numpy as np
import pytest

from dyadic_morrey.core.cubes import cube
from dyadic_morrey.core.grid import GridFunction, cube_means
from dyadic_morrey.errors import ParameterError, ShapeMismatchError
from dyadic_morrey.ensembles import random_ensemble, scale_ladder, sparse_haar_span
from dyadic_morrey.haar import SignPattern, forward_transform, haar_basis, haar_function, sign_patterns
from dyadic_morrey.operators import (commutator_direct, commutator_tail_high, commutator_tail_low,
                                     commutator_terms, decomposition_residual, fractional_integral,
                                     fractional_power_coefficients, haar_square_constant,
                                     max_index_radius, paraproduct, pointwise_majorant, scale_truncate,
                                     spatial_truncate)


def test_haar_functions_are_eigenvectors(plane):
    for eps, q in haar_basis(plane)[::7]:
        h = haar_function(eps, q, plane)
        image = fractional_integral(h, 0.5)
        assert np.allclose(image.values, h.values * q.measure ** 0.25, atol=1e-14)


def test_fractional_integral_kills_constants(shifted):
    assert fractional_integral(GridFunction.constant(shifted, 3.0), 0.5).is_zero()


def test_fractional_powers_compose(functions):
    f = functions[0]
    twice = fractional_power_coefficients(fractional_power_coefficients(f, 0.25), 0.25)
    once = fractional_power_coefficients(f, 0.5)
    assert np.allclose(twice.to_vector(), once.to_vector())


def test_fractional_integral_rejects_alpha(functions):
    with pytest.raises(ParameterError):
        fractional_integral(functions[0], 0.0)
    with pytest.raises(ParameterError):
        fractional_integral(functions[0], 1.0)


def test_paraproduct_against_definition(line, functions):
    a, f = functions[0], functions[1]
    expected = GridFunction.zeros(line)
    for eps, q, value in forward_transform(a).items():
        mean = cube_means(f, q.level)[line.flat_index(q)]
        expected = expected + haar_function(eps, q, line) * (value * mean)
    assert np.allclose(paraproduct(a, f).values, expected.values)


def test_unnormalized_paraproduct_scales_by_measure(line, functions):
    f = functions[3]
    eps = sign_patterns(1)[0]
    q = cube(2, 1)
    h = haar_function(eps, q, line)
    normalized = forward_transform(paraproduct(h, f)).get(eps, q)
    plain = forward_transform(paraproduct(h, f, normalized=False)).get(eps, q)
    assert plain == pytest.approx(normalized * q.measure)


def test_paraproduct_rejects_mismatched_geometry(line, shifted):
    with pytest.raises(ShapeMismatchError):
        paraproduct(GridFunction.zeros(line), GridFunction.zeros(shifted))


def test_commutator_of_constant_symbol_vanishes(functions, line):
    a = GridFunction.constant(line, 4.0)
    assert np.allclose(commutator_direct(a, functions[0], 0.5).values, 0.0, atol=1e-12)


def test_commutator_is_linear_in_the_symbol(functions):
    a, b, f = functions[0], functions[1], functions[2]
    combined = commutator_direct(a + b * 2.0, f, 0.25)
    separate = commutator_direct(a, f, 0.25) + commutator_direct(b, f, 0.25) * 2.0
    assert np.allclose(combined.values, separate.values)


@pytest.mark.parametrize('alpha', [0.25, 0.5, 0.9])
def test_commutator_decomposition_one_dimension(functions, alpha):
    for a, f in zip(functions[:4], functions[4:8]):
        assert decomposition_residual(a, f, alpha) < 1e-9


@pytest.mark.parametrize('alpha', [0.5, 1.5])
def test_commutator_decomposition_two_dimensions(planar_functions, alpha):
    a, f = planar_functions[0], planar_functions[1]
    assert decomposition_residual(a + 2.0, f, alpha) < 1e-9


def test_commutator_terms_split_by_pattern(plane, planar_functions):
    a, f = planar_functions[2], planar_functions[3]
    total = sum(commutator_terms(a, f, 0.5, eps).combined for eps in sign_patterns(2))
    assert np.allclose(total.values, commutator_direct(a, f, 0.5).values, atol=1e-10)


def test_tails_split_the_commutator(line, functions):
    a, f = functions[0], functions[1]
    full = commutator_direct(a, f, 0.5)
    high = commutator_tail_high(a, f, 0.5, 0)
    assert np.allclose(high.values + full.values.mean(), full.values)
    assert commutator_tail_high(a, f, 0.5, line.finest_level).is_zero()
    assert commutator_tail_low(a, f, 0.5, 1).is_zero()


def test_scale_truncation(line, functions):
    a = functions[5]
    assert np.allclose(scale_truncate(a, line.finest_level).values, a.values)
    assert np.count_nonzero(forward_transform(scale_truncate(a, 2)).level(3)) == 0
    with pytest.raises(ParameterError):
        scale_truncate(a, -1)


def test_spatial_truncation_keeps_far_cubes(plane, planar_functions):
    a = planar_functions[0]
    level = 2
    kept = forward_transform(spatial_truncate(a, level, 2.0)).level(level)
    original = forward_transform(a).level(level)
    for flat, q in enumerate(plane.cubes(level)):
        far = np.hypot(*q.index) > 2.0
        assert np.allclose(kept[flat], original[flat] if far else 0.0)
    assert spatial_truncate(a, level, max_index_radius(plane, level)).is_zero()


def test_haar_square_constant_on_cube(plane):
    result = haar_square_constant(cube(2, 1, 2), 0.5, plane)
    assert result.ancestor_levels == 2
    assert result.on_cube == pytest.approx(result.predicted)
    assert result.off_cube_norm > 0.0


def test_haar_square_constant_of_base_cube_is_zero(line):
    result = haar_square_constant(line.base_cube, 0.5, line)
    assert result.on_cube == 0.0
    assert result.predicted == 0.0


@pytest.mark.parametrize('alpha,p,q', [(0.25, 1.6, 1.2), (0.5, 1.6, 1.2), (0.5, 1.5, 1.0)])
def test_pointwise_majorant_holds(line, functions, alpha, p, q):
    for f in functions:
        report = pointwise_majorant(f, alpha, p, q)
        assert report.violations() == 0


def test_pointwise_majorant_two_dimensions(planar_functions):
    for f in planar_functions:
        report = pointwise_majorant(f, 1.0, 1.5, 1.2)
        assert len(report.patterns) == 3
        assert report.violations() == 0


def test_sparse_symbol_truncation_is_exact(line, rng):
    a = sparse_haar_span(line, rng)
    assert np.allclose(scale_truncate(a, line.finest_level).values, a.values)


def test_ladder_has_every_level(line):
    ladder = scale_ladder(line)
    c = forward_transform(ladder)
    eps = SignPattern(bits=(1,))
    for j in line.haar_levels:
        assert c.get(eps, cube(j, 0)) == pytest.approx(2.0 ** (-j / 2.0))


def test_random_ensemble_is_reproducible(plane):
    first = random_ensemble(plane, 3, seed=5)
    second = random_ensemble(plane, 3, seed=5)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(first, second))


def test_majorant_of_zero_and_of_a_haar_function(line):
    zero = pointwise_majorant(GridFunction.zeros(line), 0.5, 1.6, 1.2)
    assert zero.left[0].is_zero() and zero.right[0].is_zero()
    q = cube(3, 2)
    h = haar_function(SignPattern(bits=(1,)), q, line)
    report = pointwise_majorant(h, 0.5, 1.6, 1.2)
    assert np.allclose(report.left[0].values, np.abs(h.values) * q.measure ** 0.5)
    assert report.violations() == 0
