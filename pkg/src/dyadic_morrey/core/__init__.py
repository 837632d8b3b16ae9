from dyadic_morrey.core.cubes import DyadicCube, GridGeometry, children, cube, parent_cube
from dyadic_morrey.core.grid import GridFunction, cube_mean, cube_means, pairing

__all__ = [
    "DyadicCube", "GridGeometry", "GridFunction",
    "cube", "parent_cube", "children", "cube_mean", "cube_means", "pairing",
]
