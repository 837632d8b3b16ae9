"""Dyadic cubes and the finite grid geometry they live in.

A cube Q_{jm} is the product of half-open intervals
[m_v 2^-j, (m_v + 1) 2^-j).  A geometry truncates R^n to the base cube
[0, 2^-j_min)^n resolved down to level J; every cube handled by the toolkit
lies inside the base cube with j_min <= level <= J.
"""
import itertools
import math
from typing import Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from dyadic_morrey.errors import DomainRangeError, ParameterError


class DyadicCube(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: int
    index: Tuple[int, ...]

    @field_validator('index')
    @classmethod
    def _non_empty(cls, index):
        if len(index) == 0:
            raise ValueError("a cube needs at least one coordinate")
        return index

    @property
    def dimension(self) -> int:
        return len(self.index)

    @property
    def side_length(self) -> float:
        return math.ldexp(1.0, -self.level)

    @property
    def measure(self) -> float:
        return math.ldexp(1.0, -self.level * self.dimension)

    @property
    def corner(self) -> Tuple[float, ...]:
        return tuple(math.ldexp(float(m), -self.level) for m in self.index)

    def contains(self, other: "DyadicCube") -> bool:
        if other.level < self.level:
            return False
        shift = other.level - self.level
        return all((m >> shift) == k for m, k in zip(other.index, self.index))

    def is_disjoint(self, other: "DyadicCube") -> bool:
        return not (self.contains(other) or other.contains(self))

    def sort_key(self):
        return self.level, self.index

    def __str__(self):
        return f"Q[{self.level},{self.index}]"


def cube(level: int, *index: int) -> DyadicCube:
    return DyadicCube(level=level, index=tuple(index))


class GridGeometry(BaseModel):
    """Base cube [0, 2^-j_min)^n resolved into 2^((J - j_min) n) cells."""
    model_config = ConfigDict(frozen=True)

    dimension: int
    coarsest_level: int = 0
    finest_level: int

    @model_validator(mode='after')
    def _check_levels(self):
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")
        if self.finest_level < self.coarsest_level:
            raise ValueError("finest level must not be coarser than the coarsest level")
        return self

    @classmethod
    def create(cls, n: int, j_min: int, J: int) -> "GridGeometry":
        try:
            return cls(dimension=n, coarsest_level=j_min, finest_level=J)
        except ValueError as e:
            raise ParameterError(str(e)) from e

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def j_min(self) -> int:
        return self.coarsest_level

    @property
    def J(self) -> int:
        return self.finest_level

    @property
    def depth(self) -> int:
        return self.finest_level - self.coarsest_level

    @property
    def side(self) -> int:
        """Number of finest cells along each axis."""
        return 1 << self.depth

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.side,) * self.dimension

    @property
    def cell_count(self) -> int:
        return self.side ** self.dimension

    @property
    def cell_measure(self) -> float:
        return math.ldexp(1.0, -self.finest_level * self.dimension)

    @property
    def base_cube(self) -> DyadicCube:
        return DyadicCube(level=self.coarsest_level, index=(0,) * self.dimension)

    @property
    def levels(self) -> range:
        return range(self.coarsest_level, self.finest_level + 1)

    @property
    def haar_levels(self) -> range:
        """Levels carrying Haar coefficients: cubes that still have children."""
        return range(self.coarsest_level, self.finest_level)

    def cubes_per_axis(self, level: int) -> int:
        self.check_level(level)
        return 1 << (level - self.coarsest_level)

    def cube_count(self, level: int) -> int:
        return self.cubes_per_axis(level) ** self.dimension

    def check_level(self, level: int, upper: int = None):
        upper = self.finest_level if upper is None else upper
        if not self.coarsest_level <= level <= upper:
            raise DomainRangeError(
                f"level {level} outside [{self.coarsest_level}, {upper}]"
            )

    def contains(self, q: DyadicCube) -> bool:
        if q.dimension != self.dimension:
            return False
        if not self.coarsest_level <= q.level <= self.finest_level:
            return False
        count = 1 << (q.level - self.coarsest_level)
        return all(0 <= m < count for m in q.index)

    def check_cube(self, q: DyadicCube):
        if not self.contains(q):
            raise DomainRangeError(f"{q} lies outside the base cube of {self}")

    def cubes(self, level: int) -> Iterator[DyadicCube]:
        """Cubes of one level in lexicographic index order."""
        count = self.cubes_per_axis(level)
        for index in itertools.product(range(count), repeat=self.dimension):
            yield DyadicCube(level=level, index=index)

    def all_cubes(self) -> Iterator[DyadicCube]:
        for level in self.levels:
            yield from self.cubes(level)

    def cube_at(self, level: int, flat: int) -> DyadicCube:
        shape = (self.cubes_per_axis(level),) * self.dimension
        return DyadicCube(level=level, index=tuple(int(m) for m in np.unravel_index(flat, shape)))

    def flat_index(self, q: DyadicCube) -> int:
        self.check_cube(q)
        shape = (self.cubes_per_axis(q.level),) * self.dimension
        return int(np.ravel_multi_index(q.index, shape))

    def cube_slices(self, q: DyadicCube) -> Tuple[slice, ...]:
        """Slices of the cell array covered by q."""
        self.check_cube(q)
        width = 1 << (self.finest_level - q.level)
        return tuple(slice(m * width, (m + 1) * width) for m in q.index)

    def block_view(self, values: np.ndarray, level: int) -> np.ndarray:
        """Regroup a cell vector as (cubes at level, cells per cube).

        Rows follow the lexicographic cube order, columns the row-major order
        of cells inside each cube.
        """
        return to_blocks(np.asarray(values).reshape(self.shape), self.cubes_per_axis(level))

    def from_block_view(self, blocks: np.ndarray, level: int) -> np.ndarray:
        return from_blocks(blocks, self.cubes_per_axis(level), self.dimension).reshape(-1)

    def __str__(self):
        return f"n={self.dimension} j_min={self.coarsest_level} J={self.finest_level}"


def to_blocks(array: np.ndarray, count: int) -> np.ndarray:
    """Split an n-d array with equal sides into count^n contiguous blocks."""
    n = array.ndim
    width = array.shape[0] // count
    interleaved = array.reshape(sum(((count, width) for _ in range(n)), ()))
    order = tuple(range(0, 2 * n, 2)) + tuple(range(1, 2 * n, 2))
    return interleaved.transpose(order).reshape(count ** n, width ** n)


def from_blocks(blocks: np.ndarray, count: int, n: int) -> np.ndarray:
    width = round(blocks.shape[1] ** (1.0 / n))
    stacked = blocks.reshape((count,) * n + (width,) * n)
    order = tuple(itertools.chain.from_iterable((k, n + k) for k in range(n)))
    return stacked.transpose(order).reshape((count * width,) * n)


def parent_cube(q: DyadicCube, k: int, geometry: GridGeometry = None) -> DyadicCube:
    """The ancestor R_{+k} of q: |R_{+k}| = 2^{kn}|q| and q is contained in it."""
    if k < 0:
        raise ParameterError(f"ancestor order must be non-negative, got {k}")
    parent = DyadicCube(level=q.level - k, index=tuple(m >> k for m in q.index))
    if geometry is not None and parent.level < geometry.coarsest_level:
        raise DomainRangeError(
            f"ancestor of order {k} of {q} is coarser than level {geometry.coarsest_level}"
        )
    return parent


def children(q: DyadicCube, geometry: GridGeometry) -> List[DyadicCube]:
    """The 2^n cubes of level j + 1 partitioning q, in lexicographic order."""
    geometry.check_cube(q)
    if q.level >= geometry.finest_level:
        raise DomainRangeError(f"{q} sits at the finest level {geometry.finest_level}")
    return [
        DyadicCube(level=q.level + 1, index=tuple(2 * m + b for m, b in zip(q.index, bits)))
        for bits in itertools.product((0, 1), repeat=q.dimension)
    ]
