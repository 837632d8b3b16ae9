"""Empirical operator norms, equivalence constants and compactness diagnostics.

Operator norms are reported as certified lower bounds: every ratio comes
from an input that is kept, so re-applying the operator reproduces it.
Nothing here claims an upper bound on a true operator norm.
"""
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from dyadic_morrey.core.grid import GridFunction
from dyadic_morrey.errors import InputError
from dyadic_morrey.haar import (forward_transform, haar_basis, haar_function, inverse_transform, project_levels,
                                sign_patterns)
from dyadic_morrey.helpers.logging_helpers import get_logger
from dyadic_morrey.norms import bmo_norm, mean_band_terms, morrey_value, square_function_morrey
from dyadic_morrey.operators import (commutator_direct, commutator_tail_high, commutator_tail_low,
                                     fractional_integral, paraproduct, scale_truncate, spatial_truncate)
from dyadic_morrey.params import FractionalParams, SpaceParams
from dyadic_morrey.predual import block_norm_lower, block_norm_upper
log = get_logger(__name__)

Operator = Callable[[GridFunction], GridFunction]
MONOTONE_SLACK = 1e-12


class OpNormEstimate(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lower: float
    probe_max: float
    ensemble_size: int
    witness: str
    witness_input: Optional[GridFunction] = None


class CubeTestingEstimate(OpNormEstimate):
    """Adds sum over e of sup_U m_U(|sum_{Q in U} <a, h^e_Q> h^e_Q|), the BMO side."""
    bmo_side: float


class DecayProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid: List[float]
    values: List[float]

    @model_validator(mode='after')
    def _shape(self):
        if len(self.grid) != len(self.values):
            raise ValueError("a decay profile needs one value per grid point")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("decay grid must be strictly increasing")
        if any(v < 0.0 for v in self.values):
            raise ValueError("decay values must be non-negative")
        return self

    @property
    def monotone(self) -> bool:
        return all(b <= a * (1.0 + MONOTONE_SLACK) + MONOTONE_SLACK
                   for a, b in zip(self.values, self.values[1:]))

    def reaches_zero(self, tolerance: float = 1e-12) -> bool:
        return any(v <= tolerance for v in self.values)


def opnorm_probe(T: Operator, in_params: SpaceParams, out_params: SpaceParams,
                 ensemble: Sequence[GridFunction]) -> OpNormEstimate:
    """max over the ensemble of ||T f||_out / ||f||_in, skipping zero-norm inputs."""
    if not ensemble:
        raise InputError("operator probe needs a nonempty ensemble")
    best, best_index = -1.0, None
    for index, f in enumerate(ensemble):
        denominator = morrey_value(f, in_params)
        if denominator == 0.0:
            continue
        ratio = morrey_value(T(f), out_params) / denominator
        if ratio > best:
            best, best_index = ratio, index
    if best_index is None:
        raise InputError("every probe input has zero norm")
    return OpNormEstimate(lower=best, probe_max=best, ensemble_size=len(ensemble),
                          witness=f"ensemble[{best_index}]", witness_input=ensemble[best_index])


def certify(estimate: OpNormEstimate, T: Operator, in_params: SpaceParams, out_params: SpaceParams) -> float:
    """Recompute the ratio of the recorded witness."""
    f = estimate.witness_input
    return morrey_value(T(f), out_params) / morrey_value(f, in_params)


def pattern_parts(a: GridFunction) -> List[GridFunction]:
    """a^e: the Haar part of a carried by one sign pattern, for every pattern."""
    c = forward_transform(a)
    return [inverse_transform(project_levels(c, eps=eps)) for eps in sign_patterns(a.geometry.dimension)]


def cube_testing_lower(a: GridFunction, alpha: float, params: SpaceParams) -> CubeTestingEstimate:
    """Test [a, I_alpha] on every Haar function normalized in M^p_q.

    The normalization is numeric, so no closed form of ||h^e_U||_{M^p_q} is
    assumed.
    """
    g = a.geometry
    target = FractionalParams.of(alpha, g.dimension).target(params)
    best, witness, witness_input = 0.0, "none", None
    basis = haar_basis(g)
    for eps, u in basis:
        h = haar_function(eps, u, g)
        h = h / morrey_value(h, params)
        value = morrey_value(commutator_direct(a, h, alpha), target)
        if value > best:
            best, witness, witness_input = value, f"h[{eps}]{u}", h
    bmo_side = sum(bmo_norm(part) for part in pattern_parts(a))
    log.debug(f"cube testing over {len(basis)} Haar functions: {best:.6g} at {witness}")
    return CubeTestingEstimate(lower=best, probe_max=best, ensemble_size=len(basis), witness=witness,
                               witness_input=witness_input, bmo_side=bmo_side)


class BmoComparisonRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    bmo: float
    lower: float
    probe: float
    bmo_side: float
    bmo_over_lower: float
    probe_over_bmo: float


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0.0 else 0.0


def theorem5_report(symbols: Sequence[GridFunction], alpha: float, params: SpaceParams,
                    probes: Sequence[GridFunction]) -> List[BmoComparisonRow]:
    """Two-sided comparison of ||a||_BMO with the commutator norm, one row per symbol."""
    target = FractionalParams.of(alpha, symbols[0].geometry.dimension).target(params) if symbols else None
    rows = []
    for a in symbols:
        bmo = bmo_norm(a)
        testing = cube_testing_lower(a, alpha, params)
        probe = opnorm_probe(lambda f: commutator_direct(a, f, alpha), params, target, probes).probe_max
        rows.append(BmoComparisonRow(bmo=bmo, lower=testing.lower, probe=probe, bmo_side=testing.bmo_side,
                                bmo_over_lower=_ratio(bmo, testing.lower),
                                probe_over_bmo=_ratio(probe, bmo)))
    return rows


def paraproduct_bmo_norm(a: GridFunction, q: float, ensemble: Sequence[GridFunction],
                         p: Optional[float] = None) -> float:
    """max over the ensemble of ||Pi_a f|| / ||f||, in L^q or, when p is given, in M^p_q."""
    params = SpaceParams.of(q if p is None else p, q).require_strict()
    best = 0.0
    for f in ensemble:
        denominator = morrey_value(f, params)
        if denominator > 0.0:
            best = max(best, morrey_value(paraproduct(a, f), params) / denominator)
    return best


class CompactnessReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    high: DecayProfile
    low: DecayProfile
    spatial: DecayProfile
    vmo_distance: DecayProfile
    high_bmo: DecayProfile
    low_bmo: DecayProfile
    coefficient_decay: DecayProfile
    spatial_level: int

    @property
    def gated(self) -> Dict[str, DecayProfile]:
        """The profiles that are nonincreasing for every symbol."""
        return {
            'vmo_distance': self.vmo_distance,
            'high_bmo': self.high_bmo,
            'low_bmo': self.low_bmo,
            'spatial': self.spatial,
            'coefficient_decay': self.coefficient_decay,
        }

    @property
    def monotone(self) -> bool:
        return all(profile.monotone for profile in self.gated.values())


def _profile(grid, fn) -> DecayProfile:
    return DecayProfile(grid=[float(x) for x in grid], values=[float(fn(x)) for x in grid])


def compactness_diagnostic(a: GridFunction, alpha: float, params: SpaceParams,
                           L_grid: Sequence[int], R_grid: Sequence[float],
                           probes: Sequence[GridFunction], level: Optional[int] = None) -> CompactnessReport:
    """The decay quantities whose vanishing characterizes a compact commutator.

    Tail probes are reported as measured; the BMO-side tails, the VMO distance
    and the spatial profiles are nonincreasing by construction and gated.
    """
    g = a.geometry
    target = FractionalParams.of(alpha, g.dimension).target(params)
    level = g.finest_level - 1 if level is None else level
    parts = pattern_parts(a)
    c = forward_transform(a)
    count = g.cubes_per_axis(level)
    grids = np.meshgrid(*([np.arange(count)] * g.dimension), indexing='ij')
    radius = np.sqrt(sum(axis.astype(np.float64) ** 2 for axis in grids)).reshape(-1)
    coefficients = np.abs(c.level(level)).max(axis=1)

    def probe(tail):
        return lambda L: opnorm_probe(lambda f: tail(a, f, alpha, L), params, target, probes).probe_max

    def pattern_tail(lower=None, upper=None):
        return lambda L: sum(
            bmo_norm(inverse_transform(project_levels(part, lower=lower(L) if lower else None,
                                                      upper=upper(L) if upper else None)))
            for part in parts
        )

    def decay(R):
        outside = coefficients[radius > R]
        return float(outside.max()) if outside.size else 0.0

    return CompactnessReport(
        high=_profile(L_grid, probe(commutator_tail_high)),
        low=_profile(L_grid, probe(commutator_tail_low)),
        spatial=_profile(R_grid, lambda R: bmo_norm(spatial_truncate(a, level, R))),
        vmo_distance=_profile(L_grid, lambda L: bmo_norm(a - scale_truncate(a, int(L)))),
        high_bmo=_profile(L_grid, pattern_tail(lower=lambda L: L)),
        low_bmo=_profile(L_grid, pattern_tail(upper=lambda L: -L)),
        coefficient_decay=_profile(R_grid, decay),
        spatial_level=level,
    )


class PredualRatio(BaseModel):
    model_config = ConfigDict(frozen=True)

    certified: float
    bracket: float
    converged: bool


def predual_fractional_ratios(ensemble: Sequence[GridFunction], alpha: float, source: SpaceParams,
                              **solver) -> List[PredualRatio]:
    """Ratios bracketing ||I_alpha f||_{H^{p0'}_{p'}} / ||f||_{H^{r0'}_{r'}}.

    certified = lower(I_alpha f) / upper(f) bounds the true ratio from below;
    bracket = upper(I_alpha f) / lower(f) bounds it from above.
    """
    if not ensemble:
        return []
    fractional = FractionalParams.of(alpha, ensemble[0].geometry.dimension)
    input_params, output_params = fractional.predual_pair(source)
    rows = []
    for f in ensemble:
        image = fractional_integral(f, fractional.alpha)
        upper_in, decomposition = block_norm_upper(f, input_params.p, input_params.q, **solver)
        lower_in = block_norm_lower(f, input_params.p, input_params.q)
        upper_out, image_decomposition = block_norm_upper(image, output_params.p, output_params.q, **solver)
        lower_out = block_norm_lower(image, output_params.p, output_params.q)
        rows.append(PredualRatio(certified=_ratio(lower_out, upper_in), bracket=_ratio(upper_out, lower_in),
                                 converged=decomposition.converged and image_decomposition.converged))
    return rows


class EquivalenceBand(BaseModel):
    """Smallest and largest observed ratio over an ensemble."""
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    samples: int

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.lower) and np.isfinite(self.upper) and self.lower > 0.0)

    @property
    def spread(self) -> float:
        return self.upper / self.lower if self.lower > 0.0 else float('inf')


def equivalence_band(numerators: Sequence[float], denominators: Sequence[float]) -> EquivalenceBand:
    ratios = [n / d for n, d in zip(numerators, denominators) if d > 0.0]
    if not ratios:
        raise InputError("no sample with a nonzero reference norm")
    return EquivalenceBand(lower=min(ratios), upper=max(ratios), samples=len(ratios))


def square_function_band(ensemble: Sequence[GridFunction], params: SpaceParams) -> EquivalenceBand:
    """||f||_{M^p_q} against sum over e of ||S^e f||_{M^p_q}."""
    return equivalence_band([morrey_value(f, params) for f in ensemble],
                            [square_function_morrey(f, params) for f in ensemble])


def lebesgue_band(ensemble: Sequence[GridFunction], q: float) -> EquivalenceBand:
    return square_function_band(ensemble, SpaceParams.lebesgue(q))


def mean_band(ensemble: Sequence[GridFunction], params: SpaceParams) -> EquivalenceBand:
    """||f||_{M^p_q} against sum_e ||S^e f||_{M^p_q} + ||f||_{M^p_1}, for f with a mean."""
    terms = [mean_band_terms(f, params) for f in ensemble]
    return equivalence_band([t['morrey'] for t in terms], [t['square'] + t['morrey_1'] for t in terms])
