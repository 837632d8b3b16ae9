"""Block spaces H^p_q: validated blocks, decomposition upper bounds and
duality lower bounds.

The upper bound minimizes the cube-splitting cost

    sum over cubes Q of |Q|^{1/p - 1/q} ||f_Q||_{L^q}   subject to   f = sum_Q f_Q,

with f_Q supported on Q.  The splitting is stored as one row per level: row
j holds the pieces f_Q of every Q in D_j side by side, which is unambiguous
because same-level cubes are disjoint.  The base row is implied by the others.
"""
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from dyadic_morrey.core.cubes import DyadicCube, GridGeometry, to_blocks
from dyadic_morrey.core.grid import GridFunction, pairing
from dyadic_morrey.errors import BlockSizeError, ShapeMismatchError
from dyadic_morrey.haar import haar_basis, haar_function
from dyadic_morrey.helpers.logging_helpers import get_logger
from dyadic_morrey.norms import level_integrals, morrey_value
from dyadic_morrey.params import PredualParams
log = get_logger(__name__)

SIZE_TOLERANCE = 1e-12
RECONSTRUCTION_TOLERANCE = 1e-9


class Block:
    """A (p, q)-block: supported on a dyadic cube with ||A||_{L^q} <= |Q|^{1/q - 1/p}."""

    def __init__(self, support: DyadicCube, data: GridFunction, params: PredualParams):
        g = data.geometry
        g.check_cube(support)
        outside = data.as_array().copy()
        outside[g.cube_slices(support)] = 0.0
        if np.any(outside):
            raise BlockSizeError(f"block data does not vanish outside {support}")
        size = float((np.sum(np.abs(data.on_cube(support)) ** params.q) * g.cell_measure) ** (1.0 / params.q))
        limit = support.measure ** params.block_exponent
        if size > limit * (1.0 + SIZE_TOLERANCE):
            raise BlockSizeError(f"||A||_q = {size:.17g} exceeds |Q|^(1/q-1/p) = {limit:.17g} on {support}")
        self._support = support
        self._data = data
        self._params = params
        self._size = size

    @property
    def support(self) -> DyadicCube:
        return self._support

    @property
    def data(self) -> GridFunction:
        return self._data

    @property
    def params(self) -> PredualParams:
        return self._params

    @property
    def size(self) -> float:
        return self._size


class BlockDecomposition:
    """Coefficients and blocks with sum lambda_j A_j = target."""

    def __init__(self, terms: List[Tuple[float, Block]], target: GridFunction,
                 converged: bool = True, iterations: int = 0):
        total = np.zeros(target.geometry.cell_count)
        for coefficient, block in terms:
            target.same_geometry(block.data)
            total += coefficient * block.data.values
        error = np.linalg.norm(total - target.values)
        scale = np.linalg.norm(target.values)
        if error > RECONSTRUCTION_TOLERANCE * max(scale, 1.0):
            raise ShapeMismatchError(f"decomposition misses its target by {error:.3e} (L2 of cell values)")
        self._terms = list(terms)
        self._target = target
        self.converged = converged
        self.iterations = iterations

    @property
    def terms(self) -> List[Tuple[float, Block]]:
        return self._terms

    @property
    def target(self) -> GridFunction:
        return self._target

    @property
    def cost(self) -> float:
        return float(sum(abs(coefficient) for coefficient, _ in self._terms))

    def to_splitting(self) -> np.ndarray:
        """Per-level rows of cube pieces, the variable layout of the solver."""
        g = self._target.geometry
        rows = np.zeros((len(g.levels), g.cell_count))
        for coefficient, block in self._terms:
            row = block.support.level - g.coarsest_level
            rows[row] += coefficient * block.data.values
        return rows

    def __add__(self, other: "BlockDecomposition") -> "BlockDecomposition":
        return BlockDecomposition(self._terms + other.terms, self._target + other.target,
                                  converged=self.converged and other.converged)

    def __len__(self):
        return len(self._terms)


class DualityGap(BaseModel):
    model_config = ConfigDict(frozen=True)

    upper: float
    lower: float
    gap: float
    converged: bool


class _SplittingProblem:
    """Cost and subgradient of the cube-splitting program for one target."""

    def __init__(self, f: GridFunction, params: PredualParams):
        g = f.geometry
        self.geometry = g
        self.params = params
        self.f = f.values
        self.levels = list(g.levels)
        cells = np.arange(g.cell_count)
        self.orders = [g.block_view(cells, j).reshape(-1) for j in self.levels]
        self.shapes = [(g.cube_count(j), g.cell_count // g.cube_count(j)) for j in self.levels]
        # |Q|^{1/p - 1/q} per level
        self.weights = [2.0 ** (j * g.dimension * params.block_exponent) for j in self.levels]

    def complete(self, free: np.ndarray) -> np.ndarray:
        rows = np.empty((len(self.levels), self.f.size))
        rows[1:] = free
        rows[0] = self.f - free.sum(axis=0)
        return rows

    def _piece_norms(self, row: np.ndarray, k: int) -> np.ndarray:
        blocks = row[self.orders[k]].reshape(self.shapes[k])
        q = self.params.q
        return (np.sum(np.abs(blocks) ** q, axis=1) * self.geometry.cell_measure) ** (1.0 / q)

    def cost(self, rows: np.ndarray) -> float:
        return float(sum(w * self._piece_norms(rows[k], k).sum() for k, w in enumerate(self.weights)))

    def _norm_gradient(self, row: np.ndarray, k: int) -> np.ndarray:
        q = self.params.q
        blocks = row[self.orders[k]].reshape(self.shapes[k])
        norms = (np.sum(np.abs(blocks) ** q, axis=1) * self.geometry.cell_measure) ** (1.0 / q)
        safe = np.where(norms > 0.0, norms, 1.0)
        grad_blocks = (self.geometry.cell_measure * np.abs(blocks) ** (q - 1.0) * np.sign(blocks)
                       / safe[:, None] ** (q - 1.0))
        grad_blocks[norms == 0.0] = 0.0
        grad = np.empty_like(row)
        grad[self.orders[k]] = grad_blocks.reshape(-1)
        return grad

    def subgradient(self, rows: np.ndarray) -> np.ndarray:
        base = self.weights[0] * self._norm_gradient(rows[0], 0)
        return np.stack([self.weights[k] * self._norm_gradient(rows[k], k) - base
                         for k in range(1, len(self.levels))])

    def partition(self) -> np.ndarray:
        """Best splitting that hands every cell wholly to one cube, by dynamic programming."""
        g = self.geometry
        integrals = level_integrals(GridFunction(g, self.f), self.params.q)
        single = {j: self.weights[k] * integrals[j] ** (1.0 / self.params.q)
                  for k, j in enumerate(self.levels)}
        best = {g.finest_level: single[g.finest_level]}
        split = {}
        for j in reversed(g.haar_levels):
            split[j] = _children_sum(g, best[j + 1], j)
            best[j] = np.minimum(single[j], split[j])
        rows = np.zeros((len(self.levels), self.f.size))
        active = np.ones(1, dtype=bool)
        for k, j in enumerate(self.levels):
            chosen = active if j == g.finest_level else active & (single[j] <= split[j])
            mask = _spread(g, chosen, j)
            rows[k][mask] = self.f[mask]
            if j < g.finest_level:
                active = _to_children(g, active & ~chosen, j)
        return rows


def _children_sum(g: GridGeometry, child_values: np.ndarray, level: int) -> np.ndarray:
    """Sum over the 2^n children of every cube of `level`, given per child."""
    count = g.cubes_per_axis(level)
    lattice = child_values.reshape((2 * count,) * g.dimension)
    return to_blocks(lattice, count).sum(axis=1)


def _spread(g: GridGeometry, per_cube: np.ndarray, level: int) -> np.ndarray:
    cells = (1 << (g.finest_level - level)) ** g.dimension
    return g.from_block_view(np.repeat(per_cube[:, None], cells, axis=1), level)


def _to_children(g: GridGeometry, per_cube: np.ndarray, level: int) -> np.ndarray:
    lattice = per_cube.reshape((g.cubes_per_axis(level),) * g.dimension)
    for axis in range(g.dimension):
        lattice = np.repeat(lattice, 2, axis=axis)
    return lattice.reshape(-1)


def _emit(problem: _SplittingProblem, rows: np.ndarray, target: GridFunction,
          converged: bool, iterations: int) -> BlockDecomposition:
    g = problem.geometry
    terms = []
    for k, j in enumerate(problem.levels):
        norms = problem._piece_norms(rows[k], k)
        for flat in np.flatnonzero(norms > 0.0):
            support = g.cube_at(j, int(flat))
            coefficient = problem.weights[k] * float(norms[flat])
            piece = np.zeros(g.shape)
            window = g.cube_slices(support)
            piece[window] = rows[k].reshape(g.shape)[window]
            terms.append((coefficient, Block(support, GridFunction(g, piece / coefficient), problem.params)))
    return BlockDecomposition(terms, target, converged=converged, iterations=iterations)


def partition_bound(f: GridFunction, p: float, q: float) -> Tuple[float, BlockDecomposition]:
    """Upper bound from the best decomposition in which blocks have disjoint supports."""
    problem = _SplittingProblem(f, PredualParams.of(p, q))
    rows = problem.partition()
    decomposition = _emit(problem, rows, f, converged=True, iterations=0)
    return decomposition.cost, decomposition


def block_norm_upper(f: GridFunction, p: float, q: float, iterations: int = 2000,
                     tolerance: float = 1e-8, window: int = 50,
                     initial: Optional[BlockDecomposition] = None) -> Tuple[float, BlockDecomposition]:
    """A feasible block decomposition of f and its cost, an upper bound on ||f||_{H^p_q}.

    Projected subgradient descent with step 1/k on the free pieces, started
    from the cheapest of the single-cube splitting f_base = f, the tree
    partition and `initial` when given.  The result is flagged unconverged
    when the budget runs out while the best cost still moves.
    """
    params = PredualParams.of(p, q)
    if f.is_zero():
        return 0.0, BlockDecomposition([], f)
    problem = _SplittingProblem(f, params)

    starts = [np.zeros((len(problem.levels), f.values.size))]
    starts[0][0] = f.values
    starts.append(problem.partition())
    if initial is not None:
        f.same_geometry(initial.target)
        starts.append(initial.to_splitting())
    costs = [problem.cost(problem.complete(s[1:])) for s in starts]
    rows = starts[int(np.argmin(costs))]
    free = rows[1:].copy()
    best_cost, best_free = min(costs), free.copy()
    log.debug(f"splitting starts cost {costs}")

    step_scale = 0.1 * np.linalg.norm(f.values) / np.sqrt(len(problem.levels))
    history = [best_cost]
    converged = len(problem.levels) == 1
    k = 0
    while not converged and k < iterations:
        k += 1
        grad = problem.subgradient(problem.complete(free))
        grad_norm = np.linalg.norm(grad)
        if grad_norm == 0.0:
            converged = True
            break
        free = free - (step_scale / k) * grad / grad_norm
        cost = problem.cost(problem.complete(free))
        if cost < best_cost:
            best_cost, best_free = cost, free.copy()
        history.append(best_cost)
        if k >= window and history[-window - 1] - best_cost <= tolerance * best_cost:
            converged = True
    if not converged:
        log.warning(f"block decomposition did not settle within {iterations} iterations; "
                    f"returning the best feasible bound {best_cost:.6g}")
    decomposition = _emit(problem, problem.complete(best_free), f, converged, k)
    return decomposition.cost, decomposition


def _ratio(f: GridFunction, g: GridFunction, dual) -> float:
    norm = morrey_value(g, dual)
    return abs(pairing(f, g)) / norm if norm > 0.0 else 0.0


def dual_witness(f: GridFunction, p: float, q: float, steps: int = 500) -> Tuple[float, GridFunction]:
    """max |<f, g>| / ||g||_{M^{p'}_{q'}} over the search family, with its maximizer."""
    params = PredualParams.of(p, q)
    dual = params.conjugate()
    geometry = f.geometry
    if f.is_zero():
        return 0.0, GridFunction.constant(geometry, 1.0)

    candidates = [haar_function(eps, q_, geometry) for eps, q_ in haar_basis(geometry)]
    candidates += [GridFunction.indicator(geometry, cube) for cube in geometry.all_cubes()]
    sign = GridFunction(geometry, np.sign(f.values))
    extremal = GridFunction(geometry, np.sign(f.values) * np.abs(f.values) ** (params.q - 1.0))
    candidates += [sign, extremal]
    ratios = [_ratio(f, g, dual) for g in candidates]
    best = int(np.argmax(ratios))
    best_value, best_witness = ratios[best], candidates[best]

    # coordinate ascent on the cell values, started from sign(f)
    current = sign.values.copy()
    current_value = _ratio(f, sign, dual)
    delta = 0.5
    sweep_improved = False
    for step in range(steps):
        cell = step % current.size
        for move in (delta, -delta):
            trial = current.copy()
            trial[cell] += move
            value = _ratio(f, GridFunction(geometry, trial), dual)
            if value > current_value:
                current, current_value, sweep_improved = trial, value, True
                break
        if cell == current.size - 1:
            if not sweep_improved:
                delta *= 0.5
            sweep_improved = False
    if current_value > best_value:
        best_value, best_witness = current_value, GridFunction(geometry, current)
    return float(best_value), best_witness


def block_norm_lower(f: GridFunction, p: float, q: float, steps: int = 500) -> float:
    """A duality lower bound on ||f||_{H^p_q}; the dual space is M^{p'}_{q'}."""
    return dual_witness(f, p, q, steps)[0]


def duality_gap_report(f: GridFunction, p: float, q: float, **solver) -> DualityGap:
    upper, decomposition = block_norm_upper(f, p, q, **solver)
    lower = block_norm_lower(f, p, q)
    return DualityGap(upper=upper, lower=lower, gap=upper - lower, converged=decomposition.converged)
