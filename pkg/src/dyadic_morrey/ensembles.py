"""Seeded test-function ensembles.

Every builder draws from one SplitMix64 stream.  A random Haar function
consumes one uniform per coefficient in canonical order: levels ascending,
cubes lexicographic, sign patterns lexicographic.
"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from dyadic_morrey.core.cubes import DyadicCube, GridGeometry
from dyadic_morrey.core.grid import GridFunction
from dyadic_morrey.core.splitmix import SplitMix64
from dyadic_morrey.haar import (HaarCoefficients, SignPattern, haar_basis, haar_function,
                                inverse_transform, sign_patterns)
from dyadic_morrey.norms import bmo_norm
from dyadic_morrey.params import PredualParams

SPARSE_TERMS = 8


def level_weights(geometry: GridGeometry, theta: float) -> np.ndarray:
    """2^{theta j} for every stored coefficient, in canonical order."""
    width = (1 << geometry.dimension) - 1
    return np.concatenate([
        np.full(geometry.cube_count(j) * width, 2.0 ** (theta * j)) for j in geometry.haar_levels
    ]) if geometry.depth else np.zeros(0)


def random_coefficients(geometry: GridGeometry, rng: SplitMix64, theta: float = 0.0) -> HaarCoefficients:
    weights = level_weights(geometry, theta)
    values = rng.uniform(weights.size, -1.0, 1.0) * weights
    return HaarCoefficients.from_vector(geometry, 0.0, values)


def random_haar_function(geometry: GridGeometry, rng: SplitMix64, theta: float = 0.0) -> GridFunction:
    """Mean-zero function with i.i.d. uniform[-1, 1] coefficients scaled by 2^{theta j}."""
    return inverse_transform(random_coefficients(geometry, rng, theta))


def random_ensemble(geometry: GridGeometry, size: int, seed: int, theta: float = 0.0) -> List[GridFunction]:
    rng = SplitMix64(seed)
    return [random_haar_function(geometry, rng, theta) for _ in range(size)]


def _bmo_normalized(functions: List[GridFunction]) -> List[GridFunction]:
    normalized = []
    for a in functions:
        norm = bmo_norm(a)
        if norm > 0.0:
            normalized.append(a / norm)
    return normalized


def bmo_normalized_ensemble(geometry: GridGeometry, size: int, seed: int,
                            theta: float = 0.0) -> List[GridFunction]:
    """Random symbols a with ||a||_BMO = 1."""
    return _bmo_normalized(random_ensemble(geometry, size, seed, theta))


class NestedEnsemble(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coarse: List[GridFunction]
    fresh: List[GridFunction]

    @property
    def members(self) -> List[GridFunction]:
        return self.coarse + self.fresh


def nested_ensemble(coarse_geometry: GridGeometry, geometry: GridGeometry, size: int, seed: int,
                    theta: float = 0.0, bmo_normalized: bool = False) -> NestedEnsemble:
    """`size` members drawn on coarse_geometry and refined, then `size` members drawn on geometry.

    The coarse part is the same list of functions for every finer geometry,
    so norms that refinement leaves unchanged take the same values on it at
    every level.  On coarse_geometry itself the fresh part is empty.  Both parts come from
    one stream seeded with `seed`, coarse members first.
    """
    rng = SplitMix64(seed)
    coarse = [random_haar_function(coarse_geometry, rng, theta) for _ in range(size)]
    fresh = []
    if geometry.finest_level > coarse_geometry.finest_level:
        fresh = [random_haar_function(geometry, rng, theta) for _ in range(size)]
    if bmo_normalized:
        coarse, fresh = _bmo_normalized(coarse), _bmo_normalized(fresh)
    return NestedEnsemble(coarse=[f.refine(geometry) for f in coarse], fresh=fresh)


def pure_haar_ensemble(geometry: GridGeometry, size: int, seed: int) -> List[GridFunction]:
    """c h^e_Q for random (e, Q) and c uniform in [-1, 1]; one index draw then one amplitude draw each."""
    rng = SplitMix64(seed)
    basis = haar_basis(geometry)
    ensemble = []
    for _ in range(size):
        eps, q = basis[int(rng.integers(1, len(basis))[0])]
        amplitude = float(rng.uniform(1, -1.0, 1.0)[0])
        ensemble.append(haar_function(eps, q, geometry) * amplitude)
    return ensemble


def sparse_haar_span(geometry: GridGeometry, rng: SplitMix64, terms: int = SPARSE_TERMS) -> GridFunction:
    """A combination of at most `terms` Haar functions, an element of dyadic VMO."""
    basis = haar_basis(geometry)
    picks = rng.integers(terms, len(basis))
    amplitudes = rng.uniform(terms, -1.0, 1.0)
    total = GridFunction.zeros(geometry)
    for index, amplitude in zip(picks, amplitudes):
        eps, q = basis[int(index)]
        total = total + haar_function(eps, q, geometry) * float(amplitude)
    return total


def scale_ladder(geometry: GridGeometry, eps: Optional[SignPattern] = None) -> GridFunction:
    """sum over levels of |Q_j|^{1/2} h^e_{Q_j}, Q_j the level-j cube at the origin.

    Each term has mean oscillation one on its cube, so no scale truncation
    short of the full geometry brings the BMO distance to zero.
    """
    eps = sign_patterns(geometry.dimension)[0] if eps is None else eps
    total = GridFunction.zeros(geometry)
    for j in geometry.haar_levels:
        q = DyadicCube(level=j, index=(0,) * geometry.dimension)
        total = total + haar_function(eps, q, geometry) * q.measure ** 0.5
    return total


def random_block(geometry: GridGeometry, support: DyadicCube, params: PredualParams,
                 rng: SplitMix64) -> GridFunction:
    """Uniform random data on `support` scaled to meet the block size condition with equality."""
    width = 1 << (geometry.finest_level - support.level)
    data = rng.uniform(width ** geometry.dimension, -1.0, 1.0).reshape((width,) * geometry.dimension)
    size = (np.sum(np.abs(data) ** params.q) * geometry.cell_measure) ** (1.0 / params.q)
    array = np.zeros(geometry.shape)
    array[geometry.cube_slices(support)] = data * support.measure ** params.block_exponent / size
    return GridFunction(geometry, array)
