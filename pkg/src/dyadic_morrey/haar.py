"""The tensor Haar system on a finite dyadic grid.

h^e_Q equals |Q|^{-1/2} on Q times a sign that is +1 on the low half of every
axis and (-1)^{e_i} on the high half of axis i.  The transform walks the
levels from fine to coarse, combining the 2^n child means of every cube into
its 2^n - 1 coefficients and its own mean; the inverse walks back up.
"""
import itertools
from functools import cache
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from dyadic_morrey.core.cubes import DyadicCube, GridGeometry, from_blocks, to_blocks
from dyadic_morrey.core.grid import GridFunction, cube_means
from dyadic_morrey.errors import DomainRangeError, ParameterError, ShapeMismatchError
from dyadic_morrey.helpers.logging_helpers import get_logger
log = get_logger(__name__)


class SignPattern(BaseModel):
    model_config = ConfigDict(frozen=True)

    bits: Tuple[int, ...]

    @field_validator('bits')
    @classmethod
    def _admissible(cls, bits):
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"sign pattern bits must be 0 or 1, got {bits}")
        if not any(bits):
            raise ValueError("the all-zero pattern is not a Haar sign pattern")
        return bits

    @property
    def dimension(self) -> int:
        return len(self.bits)

    def __str__(self):
        return "".join(str(b) for b in self.bits)


@cache
def sign_patterns(n: int) -> Tuple[SignPattern, ...]:
    """The 2^n - 1 admissible patterns in lexicographic order."""
    return tuple(
        SignPattern(bits=bits) for bits in itertools.product((0, 1), repeat=n) if any(bits)
    )


@cache
def sign_matrix(n: int) -> np.ndarray:
    """Row e, column c: the sign of h^e on child c (children in row-major order)."""
    offsets = np.array(list(itertools.product((0, 1), repeat=n)))
    bits = np.array([p.bits for p in sign_patterns(n)])
    matrix = (-1.0) ** (bits @ offsets.T)
    matrix.setflags(write=False)
    return matrix


def pattern_index(eps: SignPattern) -> int:
    return sign_patterns(eps.dimension).index(eps)


def _scale(level: int, n: int) -> float:
    """|Q|^{1/2} for a cube of the given level."""
    return 2.0 ** (-level * n / 2.0)


class HaarCoefficients:
    """The family <f, h^e_Q> over the Haar levels plus the base-cube mean.

    Level j is stored as an array of shape (cubes at level j, 2^n - 1), rows in
    lexicographic cube order and columns in sign-pattern order.
    """

    def __init__(self, geometry: GridGeometry, base_mean: float, levels: Dict[int, np.ndarray]):
        stored = {}
        width = (1 << geometry.dimension) - 1
        for j in geometry.haar_levels:
            array = np.array(levels[j], dtype=np.float64)
            if array.shape != (geometry.cube_count(j), width):
                raise ShapeMismatchError(f"level {j} coefficients have shape {array.shape}")
            array.setflags(write=False)
            stored[j] = array
        self._geometry = geometry
        self._base_mean = float(base_mean)
        self._levels = stored

    @classmethod
    def zeros(cls, geometry: GridGeometry, base_mean: float = 0.0) -> "HaarCoefficients":
        width = (1 << geometry.dimension) - 1
        return cls(geometry, base_mean,
                   {j: np.zeros((geometry.cube_count(j), width)) for j in geometry.haar_levels})

    @classmethod
    def from_vector(cls, geometry: GridGeometry, base_mean: float, vector) -> "HaarCoefficients":
        """Inverse of to_vector: levels ascending, cubes lexicographic, patterns lexicographic."""
        vector = np.asarray(vector, dtype=np.float64)
        width = (1 << geometry.dimension) - 1
        levels, start = {}, 0
        for j in geometry.haar_levels:
            size = geometry.cube_count(j) * width
            if start + size > vector.size:
                raise ShapeMismatchError(f"{vector.size} coefficients are too few for {geometry}")
            levels[j] = vector[start:start + size].reshape(-1, width)
            start += size
        if start != vector.size:
            raise ShapeMismatchError(f"{vector.size} coefficients given, {geometry} needs {start}")
        return cls(geometry, base_mean, levels)

    @property
    def geometry(self) -> GridGeometry:
        return self._geometry

    @property
    def base_mean(self) -> float:
        return self._base_mean

    @property
    def count(self) -> int:
        return sum(a.size for a in self._levels.values())

    def level(self, j: int) -> np.ndarray:
        self._geometry.check_level(j, upper=self._geometry.finest_level - 1)
        return self._levels[j]

    def to_vector(self) -> np.ndarray:
        if not self._levels:
            return np.zeros(0)
        return np.concatenate([self._levels[j].reshape(-1) for j in self._geometry.haar_levels])

    def get(self, eps: SignPattern, q: DyadicCube) -> float:
        self._check_haar_cube(q)
        return float(self._levels[q.level][self._geometry.flat_index(q), pattern_index(eps)])

    def with_value(self, eps: SignPattern, q: DyadicCube, value: float) -> "HaarCoefficients":
        self._check_haar_cube(q)
        levels = dict(self._levels)
        array = levels[q.level].copy()
        array[self._geometry.flat_index(q), pattern_index(eps)] = value
        levels[q.level] = array
        return HaarCoefficients(self._geometry, self._base_mean, levels)

    def map_levels(self, fn: Callable[[int, np.ndarray], np.ndarray],
                   base_mean: Optional[float] = None) -> "HaarCoefficients":
        return HaarCoefficients(
            self._geometry,
            self._base_mean if base_mean is None else base_mean,
            {j: fn(j, a) for j, a in self._levels.items()},
        )

    def items(self) -> Iterator[Tuple[SignPattern, DyadicCube, float]]:
        patterns = sign_patterns(self._geometry.dimension)
        for j in self._geometry.haar_levels:
            for flat, row in enumerate(self._levels[j]):
                q = self._geometry.cube_at(j, flat)
                for eps, value in zip(patterns, row):
                    yield eps, q, float(value)

    def _check_haar_cube(self, q: DyadicCube):
        self._geometry.check_cube(q)
        if q.level >= self._geometry.finest_level:
            raise DomainRangeError(f"{q} has no Haar functions at the finest level")

    def __add__(self, other: "HaarCoefficients") -> "HaarCoefficients":
        if self._geometry != other.geometry:
            raise ShapeMismatchError("coefficient families live on different geometries")
        return HaarCoefficients(self._geometry, self._base_mean + other.base_mean,
                                {j: a + other.level(j) for j, a in self._levels.items()})

    def __mul__(self, factor: float) -> "HaarCoefficients":
        return self.map_levels(lambda j, a: a * factor, base_mean=self._base_mean * factor)

    __rmul__ = __mul__


def haar_function(eps: SignPattern, q: DyadicCube, geometry: GridGeometry) -> GridFunction:
    """h^e_Q as a grid function; needs q above the finest level."""
    geometry.check_cube(q)
    if q.level >= geometry.finest_level:
        raise DomainRangeError(f"{q} sits at the finest level; its sign structure is unresolved")
    if eps.dimension != geometry.dimension:
        raise ShapeMismatchError(f"pattern {eps} does not match dimension {geometry.dimension}")
    half = 1 << (geometry.finest_level - q.level - 1)
    sign = np.ones(())
    for bit in eps.bits:
        axis = np.concatenate([np.ones(half), np.full(half, -1.0 if bit else 1.0)])
        sign = np.multiply.outer(sign, axis)
    array = np.zeros(geometry.shape)
    array[geometry.cube_slices(q)] = sign / _scale(q.level, geometry.dimension)
    return GridFunction(geometry, array)


def forward_transform(f: GridFunction) -> HaarCoefficients:
    g = f.geometry
    n = g.dimension
    signs = sign_matrix(n)
    means = f.as_array()
    levels = {}
    for j in reversed(g.haar_levels):
        count = g.cubes_per_axis(j)
        child_means = to_blocks(means, count)
        levels[j] = (child_means @ signs.T) * (_scale(j, n) / (1 << n))
        means = child_means.mean(axis=1).reshape((count,) * n)
    log.debug(f"forward transform over {len(levels)} levels of {g}")
    return HaarCoefficients(g, float(means.reshape(-1)[0]), levels)


def inverse_transform(c: HaarCoefficients) -> GridFunction:
    g = c.geometry
    n = g.dimension
    signs = sign_matrix(n)
    means = np.full((1,) * n, c.base_mean)
    for j in g.haar_levels:
        count = g.cubes_per_axis(j)
        child_means = means.reshape(-1, 1) + (c.level(j) @ signs) / _scale(j, n)
        means = from_blocks(child_means, count, n)
    return GridFunction(g, means)


def _coefficients_of(f) -> HaarCoefficients:
    return f if isinstance(f, HaarCoefficients) else forward_transform(f)


def _slice_values(c: HaarCoefficients, j: int, column: Optional[int] = None) -> np.ndarray:
    g = c.geometry
    n = g.dimension
    coeffs = c.level(j)
    if column is not None:
        coeffs = coeffs[:, column:column + 1]
        signs = sign_matrix(n)[column:column + 1]
    else:
        signs = sign_matrix(n)
    array = from_blocks((coeffs @ signs) / _scale(j, n), g.cubes_per_axis(j), n)
    repeat = 1 << (g.finest_level - j - 1)
    for axis in range(n):
        array = np.repeat(array, repeat, axis=axis)
    return array.reshape(-1)


def level_slice(c, j: int, eps: Optional[SignPattern] = None) -> GridFunction:
    """f_j = sum over Q in D_j (and over e, unless one pattern is given) of <f,h^e_Q> h^e_Q."""
    c = _coefficients_of(c)
    c.geometry.check_level(j, upper=c.geometry.finest_level - 1)
    column = None if eps is None else pattern_index(eps)
    return GridFunction(c.geometry, _slice_values(c, j, column))


def level_slices(c, eps: Optional[SignPattern] = None) -> Dict[int, GridFunction]:
    c = _coefficients_of(c)
    return {j: level_slice(c, j, eps) for j in c.geometry.haar_levels}


def square_function(f, eps: Optional[SignPattern] = None) -> GridFunction:
    """S^e f = (sum_j |f^e_j|^2)^{1/2}.

    Without a pattern the squares of every f^e_j are summed over e as well,
    giving the full dyadic square function; the equivalence bands use the
    per-pattern form summed over e after taking norms.
    """
    c = _coefficients_of(f)
    g = c.geometry
    patterns = sign_patterns(g.dimension) if eps is None else (eps,)
    total = np.zeros(g.cell_count)
    for pattern in patterns:
        column = pattern_index(pattern)
        for j in g.haar_levels:
            total += _slice_values(c, j, column) ** 2
    return GridFunction(g, np.sqrt(total))


def nonhomogeneous_square_function(f, k: int, eps: SignPattern) -> GridFunction:
    """(sum_{j >= k} |f^e_j|^2)^{1/2}, the Haar half of the nonhomogeneous expansion."""
    c = _coefficients_of(f)
    g = c.geometry
    g.check_level(k)
    column = pattern_index(eps)
    total = np.zeros(g.cell_count)
    for j in g.haar_levels:
        if j >= k:
            total += _slice_values(c, j, column) ** 2
    return GridFunction(g, np.sqrt(total))


def project_levels(c, lower: Optional[int] = None, upper: Optional[int] = None,
                   include_mean: bool = False, eps: Optional[SignPattern] = None) -> HaarCoefficients:
    """Keep the coefficients with lower <= level <= upper (and pattern eps when given)."""
    c = _coefficients_of(c)
    lower = -np.inf if lower is None else lower
    upper = np.inf if upper is None else upper
    mask = None
    if eps is not None:
        mask = np.zeros((1 << c.geometry.dimension) - 1)
        mask[pattern_index(eps)] = 1.0

    def keep(j, a):
        if not lower <= j <= upper:
            return np.zeros_like(a)
        return a if mask is None else a * mask

    return c.map_levels(keep, base_mean=c.base_mean if include_mean else 0.0)


def partial_sum(f: GridFunction, M: int, include_mean: bool = False) -> GridFunction:
    """Haar partial sum over the levels [-M, M] clipped to the geometry."""
    if M < 0:
        raise ParameterError(f"partial sum order must be non-negative, got {M}")
    return inverse_transform(project_levels(f, -M, M, include_mean=include_mean))


def haar_part(f: GridFunction) -> GridFunction:
    return inverse_transform(project_levels(f))


def expectation_projection(f: GridFunction, k: int) -> GridFunction:
    """E_k f = sum over Q in D_k of m_Q(f) chi_Q."""
    g = f.geometry
    g.check_level(k)
    means = cube_means(f, k)
    cells = (1 << (g.finest_level - k)) ** g.dimension
    return GridFunction(g, g.from_block_view(np.repeat(means[:, None], cells, axis=1), k))


def haar_basis(geometry: GridGeometry) -> List[Tuple[SignPattern, DyadicCube]]:
    """Every (pattern, cube) pair with a Haar function, in canonical order."""
    return [
        (eps, q)
        for j in geometry.haar_levels
        for q in geometry.cubes(j)
        for eps in sign_patterns(geometry.dimension)
    ]


def local_energy(f) -> Dict[int, np.ndarray]:
    """sum over e and over Q inside R of <f, h^e_Q>^2, for every cube R, keyed by level."""
    c = _coefficients_of(f)
    g = c.geometry
    energy = {g.finest_level: np.zeros(g.cube_count(g.finest_level))}
    for j in reversed(g.haar_levels):
        count = g.cubes_per_axis(j)
        below = to_blocks(energy[j + 1].reshape((2 * count,) * g.dimension), count).sum(axis=1)
        energy[j] = below + np.sum(c.level(j) ** 2, axis=1)
    return energy
