"""The dyadic fractional integral, paraproducts, BMO commutators and the
truncations used to probe compactness.

Everything acts in Haar coefficient space: I_alpha multiplies <f, h^e_Q> by
|Q|^{alpha/n} = 2^{-j alpha} and sends the base mean to zero.  Pointwise
products are exact because both factors are constant on finest cells.
"""
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from dyadic_morrey.core.cubes import DyadicCube, GridGeometry
from dyadic_morrey.core.grid import GridFunction, cube_means
from dyadic_morrey.errors import ParameterError
from dyadic_morrey.haar import (HaarCoefficients, SignPattern, _coefficients_of, forward_transform,
                                inverse_transform, level_slice, pattern_index,
                                project_levels, sign_patterns)
from dyadic_morrey.helpers.logging_helpers import get_logger
from dyadic_morrey.norms import morrey_value
from dyadic_morrey.params import FractionalParams, SpaceParams
log = get_logger(__name__)


def fractional_power_coefficients(f, alpha: float) -> HaarCoefficients:
    """Coefficients of I_alpha f; composing two calls multiplies the symbols."""
    c = _coefficients_of(f)
    FractionalParams.of(alpha, c.geometry.dimension)
    return c.map_levels(lambda j, a: a * 2.0 ** (-j * alpha), base_mean=0.0)


def fractional_integral(f: GridFunction, alpha: float) -> GridFunction:
    return inverse_transform(fractional_power_coefficients(f, alpha))


def _pattern_mask(n: int, eps: Optional[SignPattern]) -> np.ndarray:
    mask = np.ones((1 << n) - 1)
    if eps is not None:
        mask[:] = 0.0
        mask[pattern_index(eps)] = 1.0
    return mask


def paraproduct_coefficients(a: GridFunction, f: GridFunction, normalized: bool = True,
                             eps: Optional[SignPattern] = None) -> HaarCoefficients:
    a.same_geometry(f)
    g = a.geometry
    mask = _pattern_mask(g.dimension, eps)

    def multiply(j, coeffs):
        weights = cube_means(f, j)
        if not normalized:
            weights = weights * 2.0 ** (-j * g.dimension)
        return coeffs * weights[:, None] * mask

    return forward_transform(a).map_levels(multiply, base_mean=0.0)


def paraproduct(a: GridFunction, f: GridFunction, normalized: bool = True,
                eps: Optional[SignPattern] = None) -> GridFunction:
    """sum over e, Q of m_Q(f) <a, h^e_Q> h^e_Q.

    With normalized=False the average m_Q(f) is replaced by <f, chi_Q>, the
    form written without the 1/|Q| factor.
    """
    a.same_geometry(f)
    return inverse_transform(paraproduct_coefficients(a, f, normalized, eps))


def commutator_direct(a: GridFunction, f: GridFunction, alpha: float) -> GridFunction:
    """[a, I_alpha] f = a I_alpha f - I_alpha(a f)."""
    a.same_geometry(f)
    return a * fractional_integral(f, alpha) - fractional_integral(a * f, alpha)


class CommutatorTerms(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eps: SignPattern
    i1: GridFunction
    i2: GridFunction
    ii: GridFunction
    iii: GridFunction

    @property
    def combined(self) -> GridFunction:
        return self.i1 - self.i2 + self.ii - self.iii


def _diagonal_square(geometry: GridGeometry, products: HaarCoefficients, column: int,
                     weight: float) -> GridFunction:
    """sum over Q of d_Q |Q|^{weight} |h_Q|^2 for per-cube products d_Q of one pattern."""
    n = geometry.dimension
    total = np.zeros(geometry.cell_count)
    for j in geometry.haar_levels:
        d = products.level(j)[:, column] * 2.0 ** (-j * n * (weight - 1.0))
        cells = (1 << (geometry.finest_level - j)) ** n
        total += geometry.from_block_view(np.repeat(d[:, None], cells, axis=1), j)
    return GridFunction(geometry, total)


def commutator_terms(a: GridFunction, f: GridFunction, alpha: float, eps: SignPattern) -> CommutatorTerms:
    """The four pieces of [a, I_alpha] f carried by the pattern eps.

    i1 = Pi^e_a(I_alpha f), i2 = I_alpha(Pi^e_a f), and with
    d_Q = <a, h^e_Q><f, h^e_Q>, ii = sum d_Q |Q|^{alpha/n} |h^e_Q|^2 and
    iii = I_alpha[sum d_Q |h^e_Q|^2].  Summed over every pattern,
    i1 - i2 + ii - iii equals the commutator when f has mean zero.
    """
    a.same_geometry(f)
    g = f.geometry
    params = FractionalParams.of(alpha, g.dimension)
    ca, cf = forward_transform(a), forward_transform(f)
    if abs(cf.base_mean) > 1e-12 * max(1.0, float(np.abs(f.values).max())):
        log.warning(f"commutator terms assume a mean-zero f; base mean is {cf.base_mean:.3e}")
    column = pattern_index(eps)
    i_f = fractional_integral(f, params.alpha)
    i1 = paraproduct(a, i_f, eps=eps)
    i2 = fractional_integral(paraproduct(a, f, eps=eps), params.alpha)
    products = HaarCoefficients(g, 0.0, {j: ca.level(j) * cf.level(j) for j in g.haar_levels})
    ii = _diagonal_square(g, products, column, params.alpha / g.dimension)
    iii = fractional_integral(_diagonal_square(g, products, column, 0.0), params.alpha)
    return CommutatorTerms(eps=eps, i1=i1, i2=i2, ii=ii, iii=iii)


def decomposition_residual(a: GridFunction, f: GridFunction, alpha: float) -> float:
    """Max-norm gap between the commutator and its four-term reassembly, relative to the commutator."""
    direct = commutator_direct(a, f, alpha)
    total = GridFunction.zeros(f.geometry)
    for eps in sign_patterns(f.geometry.dimension):
        total = total + commutator_terms(a, f, alpha, eps).combined
    scale = max(float(np.abs(direct.values).max()), 1.0)
    return float(np.abs(direct.values - total.values).max()) / scale


def commutator_tail_high(a: GridFunction, f: GridFunction, alpha: float, L: int) -> GridFunction:
    """Haar part of the commutator on output levels j >= L."""
    return inverse_transform(project_levels(commutator_direct(a, f, alpha), lower=L))


def commutator_tail_low(a: GridFunction, f: GridFunction, alpha: float, L: int) -> GridFunction:
    """Haar part of the commutator on output levels j <= -L."""
    return inverse_transform(project_levels(commutator_direct(a, f, alpha), upper=-L))


def scale_truncate(a: GridFunction, L: int) -> GridFunction:
    """a_(L): the Haar coefficients of a with level in [-L, L]; the mean is dropped."""
    if L < 0:
        raise ParameterError(f"scale truncation order must be non-negative, got {L}")
    g = a.geometry
    if -L < g.coarsest_level or L > g.finest_level - 1:
        log.debug(f"scale window [{-L}, {L}] clipped to the Haar levels "
                  f"[{g.coarsest_level}, {g.finest_level - 1}] of {g}")
    return inverse_transform(project_levels(a, -L, L))


def spatial_truncate(a: GridFunction, level: int, R: float,
                     eps: Optional[SignPattern] = None) -> GridFunction:
    """Level-`level` Haar terms of a whose cube index m has Euclidean |m| > R."""
    g = a.geometry
    g.check_level(level, upper=g.finest_level - 1)
    count = g.cubes_per_axis(level)
    grids = np.meshgrid(*([np.arange(count)] * g.dimension), indexing='ij')
    radius = np.sqrt(sum(axis.astype(np.float64) ** 2 for axis in grids)).reshape(-1)
    mask = _pattern_mask(g.dimension, eps)

    def keep(j, coeffs):
        if j != level:
            return np.zeros_like(coeffs)
        return coeffs * (radius > R)[:, None] * mask

    return inverse_transform(forward_transform(a).map_levels(keep, base_mean=0.0))


def max_index_radius(geometry: GridGeometry, level: int) -> float:
    geometry.check_level(level)
    return float(np.sqrt(geometry.dimension) * (geometry.cubes_per_axis(level) - 1))


class HaarSquareConstant(BaseModel):
    model_config = ConfigDict(frozen=True)

    on_cube: float
    predicted: float
    off_cube_norm: float
    ancestor_levels: int


def haar_square_constant(q: DyadicCube, alpha: float, geometry: GridGeometry) -> HaarSquareConstant:
    """I_alpha[|h_Q|^2] = I_alpha[|Q|^{-1} chi_Q] measured on Q and off Q.

    On Q the value is (2^n - 1)|Q|^{alpha/n - 1} sum_{k=1}^{K} 2^{-k(n - alpha)},
    K the number of ancestors of Q inside the base cube.  Off Q the sibling
    contributions leave a nonzero remainder, reported as its L^2 norm.
    """
    params = FractionalParams.of(alpha, geometry.dimension)
    n = geometry.dimension
    square = GridFunction.indicator(geometry, q) / q.measure
    result = fractional_integral(square, params.alpha)
    inside = result.on_cube(q)
    K = q.level - geometry.coarsest_level
    series = sum(2.0 ** (-k * (n - params.alpha)) for k in range(1, K + 1))
    predicted = ((1 << n) - 1) * q.measure ** (params.alpha / n - 1.0) * series
    outside = result.as_array().copy()
    outside[geometry.cube_slices(q)] = 0.0
    return HaarSquareConstant(
        on_cube=float(inside.reshape(-1)[0]),
        predicted=predicted,
        off_cube_norm=float(np.sqrt(np.sum(outside ** 2) * geometry.cell_measure)),
        ancestor_levels=K,
    )


class MajorantReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    patterns: Tuple[SignPattern, ...]
    left: List[GridFunction]
    right: List[GridFunction]
    constant: float
    s: float

    def violations(self, slack: float = 1e-12) -> int:
        """Cells, over every pattern, where left exceeds right beyond rounding."""
        return int(sum(
            np.count_nonzero(l.values > r.values * (1.0 + slack) + slack)
            for l, r in zip(self.left, self.right)
        ))


def pointwise_majorant(f: GridFunction, alpha: float, p: float, q: float) -> MajorantReport:
    """Both sides of the pointwise chain behind the fractional integral bound.

    Per pattern e: left(x) = sum_j 2^{-j alpha} |f^e_j(x)| and
    right(x) = C ||f||_{M^p_q}^{1 - p/s} (max_l |f^e_l(x)|)^{p/s} with
    C = 1/(1 - 2^{-n/s}) + 1/(1 - 2^{-alpha}).
    """
    g = f.geometry
    params = FractionalParams.of(alpha, g.dimension)
    source = SpaceParams.of(p, q)
    s = params.target(source).p
    constant = 1.0 / (1.0 - 2.0 ** (-g.dimension / s)) + 1.0 / (1.0 - 2.0 ** (-params.alpha))
    scale = morrey_value(f, source)
    c = forward_transform(f)
    patterns = sign_patterns(g.dimension)
    left, right = [], []
    for eps in patterns:
        slices = [np.abs(level_slice(c, j, eps).values) for j in g.haar_levels]
        if slices:
            lhs = sum(2.0 ** (-j * params.alpha) * v for j, v in zip(g.haar_levels, slices))
            peak = np.max(slices, axis=0)
        else:
            lhs = peak = np.zeros(g.cell_count)
        rhs = constant * scale ** (1.0 - p / s) * peak ** (p / s)
        left.append(GridFunction(g, lhs))
        right.append(GridFunction(g, rhs))
    return MajorantReport(patterns=patterns, left=left, right=right, constant=constant, s=s)
