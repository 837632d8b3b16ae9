"""Morrey, Lebesgue, BMO and oscillation norms on a dyadic grid.

Every supremum over cubes is exhaustive: per-level block sums are built from
the finest level up, so a Morrey norm costs one pass over the cube tree.
"""
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from dyadic_morrey.core.cubes import DyadicCube, GridGeometry, to_blocks
from dyadic_morrey.core.grid import GridFunction, cube_mean
from dyadic_morrey.errors import ParameterError
from dyadic_morrey.haar import sign_patterns, square_function
from dyadic_morrey.params import SpaceParams

# relative slack under which a finer or later cube does not displace the witness
TIE_TOLERANCE = 1e-12


class NormReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    witness: DyadicCube


def _check_exponent(q: float):
    if not q >= 1.0:
        raise ParameterError(f"q = {q} violates q >= 1")


def lq_norm(f: GridFunction, q: float, cube: Optional[DyadicCube] = None) -> float:
    """(integral over cube of |f|^q)^{1/q}; the cube defaults to the base cube."""
    _check_exponent(q)
    values = f.values if cube is None else f.on_cube(cube)
    return float((np.sum(np.abs(values) ** q) * f.geometry.cell_measure) ** (1.0 / q))


def level_integrals(f: GridFunction, q: float) -> Dict[int, np.ndarray]:
    """Integral of |f|^q over every cube, keyed by level, lexicographic order."""
    g = f.geometry
    sums = np.abs(f.as_array()) ** q * g.cell_measure
    integrals = {g.finest_level: sums.reshape(-1)}
    for j in reversed(range(g.coarsest_level, g.finest_level)):
        count = g.cubes_per_axis(j)
        sums = to_blocks(sums, count).sum(axis=1).reshape((count,) * g.dimension)
        integrals[j] = sums.reshape(-1)
    return integrals


def _argmax_report(geometry: GridGeometry, per_level: Dict[int, np.ndarray]) -> NormReport:
    best, witness = -1.0, None
    for j in geometry.levels:
        values = per_level[j]
        flat = int(np.argmax(values))
        if values[flat] > best * (1.0 + TIE_TOLERANCE) or witness is None:
            best, witness = float(values[flat]), (j, flat)
    return NormReport(value=max(best, 0.0), witness=geometry.cube_at(*witness))


def morrey_norm(f: GridFunction, params: SpaceParams) -> NormReport:
    """sup over cubes of |Q|^{1/p - 1/q} ||f||_{L^q(Q)}, with its maximizing cube.

    Ties go to the coarsest level, then to the lexicographically first index.
    """
    g = f.geometry
    integrals = level_integrals(f, params.q)
    exponent = 1.0 / params.p - 1.0 / params.q
    per_level = {
        j: 2.0 ** (-j * g.dimension * exponent) * integrals[j] ** (1.0 / params.q)
        for j in g.levels
    }
    return _argmax_report(g, per_level)


def morrey_value(f: GridFunction, params: SpaceParams) -> float:
    return morrey_norm(f, params).value


def mean_oscillations(a: GridFunction) -> Dict[int, np.ndarray]:
    """m_Q(|a - m_Q(a)|) for every cube, keyed by level."""
    g = a.geometry
    result = {}
    for j in g.levels:
        blocks = g.block_view(a.values, j)
        result[j] = np.abs(blocks - blocks.mean(axis=1, keepdims=True)).mean(axis=1)
    return result


def _broadcast(geometry: GridGeometry, level: int, per_cube: np.ndarray) -> np.ndarray:
    cells = (1 << (geometry.finest_level - level)) ** geometry.dimension
    return geometry.from_block_view(np.repeat(per_cube[:, None], cells, axis=1), level)


def sharp_maximal(f: GridFunction) -> GridFunction:
    """Dyadic sharp maximal function: sup over cubes containing x of the mean oscillation."""
    g = f.geometry
    result = np.zeros(g.cell_count)
    for j, oscillation in mean_oscillations(f).items():
        np.maximum(result, _broadcast(g, j, oscillation), out=result)
    return GridFunction(g, result)


def bmo_report(a: GridFunction) -> NormReport:
    return _argmax_report(a.geometry, mean_oscillations(a))


def bmo_norm(a: GridFunction) -> float:
    return bmo_report(a).value


def best_constant_oscillation(a: GridFunction) -> float:
    """sup over cubes of inf_c m_Q(|a - c|); the infimum is attained at a median."""
    g = a.geometry
    best = 0.0
    for j in g.levels:
        blocks = g.block_view(a.values, j)
        medians = np.median(blocks, axis=1, keepdims=True)
        best = max(best, float(np.abs(blocks - medians).mean(axis=1).max()))
    return best


def oscillation_norm(f: GridFunction, cube: DyadicCube, q: float) -> float:
    """||f - m_R(f)||_{L^q(R)}."""
    _check_exponent(q)
    mean = cube_mean(f, cube)
    deviation = np.abs(f.on_cube(cube) - mean)
    return float((np.sum(deviation ** q) * f.geometry.cell_measure) ** (1.0 / q))


def square_function_morrey(f: GridFunction, params: SpaceParams) -> float:
    """Sum over patterns of ||S^e f||_{M^p_q}."""
    return sum(
        morrey_value(square_function(f, eps), params)
        for eps in sign_patterns(f.geometry.dimension)
    )


def mean_band_terms(f: GridFunction, params: SpaceParams) -> Dict[str, float]:
    """The three Morrey quantities compared when a function need not have mean zero."""
    return {
        'morrey': morrey_value(f, params),
        'square': square_function_morrey(f, params),
        'morrey_1': morrey_value(f, SpaceParams.of(params.p, 1.0)),
    }


def oscillation_energies(f: GridFunction) -> Dict[int, np.ndarray]:
    """||f - m_R(f)||_{L^2(R)}^2 for every cube R, keyed by level."""
    g = f.geometry
    result = {}
    for j in g.levels:
        blocks = g.block_view(f.values, j)
        result[j] = np.sum((blocks - blocks.mean(axis=1, keepdims=True)) ** 2, axis=1) * g.cell_measure
    return result
