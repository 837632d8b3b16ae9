from typing import Sequence, Union

import numpy as np

from dyadic_morrey.core.cubes import DyadicCube, GridGeometry
from dyadic_morrey.errors import DomainRangeError, ShapeMismatchError


class GridFunction:
    """A function constant on every finest cell of a geometry.

    Values are stored row-major over the cell lattice as an immutable float64
    vector.
    """

    def __init__(self, geometry: GridGeometry, values: Union[np.ndarray, Sequence[float]]):
        array = np.array(values, dtype=np.float64).reshape(-1)
        if array.size != geometry.cell_count:
            raise ShapeMismatchError(
                f"{array.size} values given for {geometry.cell_count} cells ({geometry})"
            )
        array.setflags(write=False)
        self._geometry = geometry
        self._values = array

    @classmethod
    def zeros(cls, geometry: GridGeometry) -> "GridFunction":
        return cls(geometry, np.zeros(geometry.cell_count))

    @classmethod
    def constant(cls, geometry: GridGeometry, value: float) -> "GridFunction":
        return cls(geometry, np.full(geometry.cell_count, float(value)))

    @classmethod
    def indicator(cls, geometry: GridGeometry, q: DyadicCube) -> "GridFunction":
        array = np.zeros(geometry.shape)
        array[geometry.cube_slices(q)] = 1.0
        return cls(geometry, array)

    @property
    def geometry(self) -> GridGeometry:
        return self._geometry

    @property
    def values(self) -> np.ndarray:
        return self._values

    def as_array(self) -> np.ndarray:
        return self._values.reshape(self._geometry.shape)

    def on_cube(self, q: DyadicCube) -> np.ndarray:
        return self.as_array()[self._geometry.cube_slices(q)]

    def restrict(self, q: DyadicCube) -> "GridFunction":
        array = np.zeros(self._geometry.shape)
        window = self._geometry.cube_slices(q)
        array[window] = self.as_array()[window]
        return GridFunction(self._geometry, array)

    def refine(self, geometry: GridGeometry) -> "GridFunction":
        """The same function resolved on a finer geometry with the same base cube."""
        g = self._geometry
        if (geometry.dimension, geometry.coarsest_level) != (g.dimension, g.coarsest_level) \
                or geometry.finest_level < g.finest_level:
            raise ShapeMismatchError(f"cannot refine {g} onto {geometry}")
        array = self.as_array()
        factor = 1 << (geometry.finest_level - g.finest_level)
        for axis in range(g.dimension):
            array = np.repeat(array, factor, axis=axis)
        return GridFunction(geometry, array)

    def evaluate(self, point: Sequence[float]) -> float:
        g = self._geometry
        if len(point) != g.dimension:
            raise ShapeMismatchError(f"point of dimension {len(point)} in {g}")
        upper = 2.0 ** (-g.coarsest_level)
        if not all(0.0 <= x < upper for x in point):
            raise DomainRangeError(f"point {tuple(point)} outside the base cube")
        cell = tuple(int(np.floor(x * 2.0 ** g.finest_level)) for x in point)
        return float(self.as_array()[cell])

    def is_zero(self) -> bool:
        return not np.any(self._values)

    def same_geometry(self, other: "GridFunction"):
        if self._geometry != other.geometry:
            raise ShapeMismatchError(f"geometry {other.geometry} does not match {self._geometry}")

    def _combine(self, other, op) -> "GridFunction":
        if isinstance(other, GridFunction):
            self.same_geometry(other)
            return GridFunction(self._geometry, op(self._values, other.values))
        return GridFunction(self._geometry, op(self._values, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __radd__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda x, y: y - x)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    def __rmul__(self, other):
        return self._combine(other, np.multiply)

    def __truediv__(self, other: float):
        return GridFunction(self._geometry, self._values / float(other))

    def __neg__(self):
        return GridFunction(self._geometry, -self._values)

    def __abs__(self):
        return GridFunction(self._geometry, np.abs(self._values))

    def __repr__(self):
        return f"GridFunction({self._geometry}, cells={self._values.size})"


def cube_mean(f: GridFunction, q: DyadicCube) -> float:
    """m_Q(f): the equal-weight average of the finest cells inside q."""
    f.geometry.check_cube(q)
    return float(f.on_cube(q).mean())


def cube_means(f: GridFunction, level: int) -> np.ndarray:
    """m_Q(f) for every cube of one level, lexicographic order."""
    return f.geometry.block_view(f.values, level).mean(axis=1)


def pairing(f: GridFunction, g: GridFunction) -> float:
    """The integral of f g over the base cube."""
    f.same_geometry(g)
    return float(np.dot(f.values, g.values) * f.geometry.cell_measure)
