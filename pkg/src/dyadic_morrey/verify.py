"""Verification suites: one per norm equivalence, boundedness band or identity.

A suite measures constants on seeded ensembles and records every measured
value as a report row.  Gate rows carry a pass flag; the suite passes when
every gate does.  Bands are gated by stability: the constant measured at the
finest stability level divided by the one at the coarsest must fall inside
the configured ratio window.

Seeds: the test functions f use `seed`, the BMO symbols `seed + 1`, the
predual ensemble `seed + 2`, its pairing partners `seed + 3` and the sparse
VMO symbols `seed + 4`; the mean shifts of the mean band draw from `seed + 5`.

The fractional integral, commutator and cube-testing bands draw nested
ensembles: members refined from the coarsest stability level, which keep
their ratios exactly, plus members drawn on each finer level.
"""
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from dyadic_morrey.core.cubes import DyadicCube, GridGeometry
from dyadic_morrey.core.grid import GridFunction, pairing
from dyadic_morrey.core.splitmix import SplitMix64
from dyadic_morrey.ensembles import (NestedEnsemble, bmo_normalized_ensemble, nested_ensemble,
                                     pure_haar_ensemble, random_block, random_ensemble,
                                     random_haar_function, scale_ladder, sparse_haar_span)
from dyadic_morrey.errors import ParameterError, ParseError
from dyadic_morrey.estimation import (EquivalenceBand, compactness_diagnostic, equivalence_band,
                                      lebesgue_band, mean_band, paraproduct_bmo_norm,
                                      predual_fractional_ratios, square_function_band,
                                      theorem5_report)
from dyadic_morrey.files import ReportMetadata, ReportTable
from dyadic_morrey.haar import (expectation_projection, forward_transform, haar_basis, haar_function,
                                inverse_transform, level_slice, local_energy)
from dyadic_morrey.helpers.logging_helpers import get_logger
from dyadic_morrey.norms import morrey_value, oscillation_energies
from dyadic_morrey.operators import (commutator_direct, decomposition_residual, fractional_integral,
                                     max_index_radius, paraproduct, pointwise_majorant)
from dyadic_morrey.params import FractionalParams, PredualParams, SpaceParams
from dyadic_morrey.predual import block_norm_lower, block_norm_upper
log = get_logger(__name__)

COLUMNS = ["check", "J", "parameters", "lower", "upper", "value", "passed"]


class VerifyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    n: int = 1
    j_min: int = 0
    J: int = 8
    stability_levels: Tuple[int, int] = (4, 8)
    p: float = 1.6
    q: float = 1.2
    pairs: List[Tuple[float, float]] = [(2.0, 2.0), (4.0, 2.0), (3.0, 1.5)]
    alphas: List[float] = [0.25, 0.5]
    lebesgue_exponents: List[float] = [1.5, 3.0]
    seed: int = 42
    ensemble_size: int = 500
    bmo_ensemble_size: int = 100
    pair_count: int = 50
    predual_J: int = 6
    predual_pq: Tuple[float, float] = (2.0, 3.0)
    predual_ensemble_size: int = 200
    predual_partners: int = 20
    theta: float = 0.0
    band_ratio: Tuple[float, float] = (0.5, 2.0)
    identity_tolerance: float = 1e-9

    @model_validator(mode='after')
    def _consistent(self):
        low, high = self.stability_levels
        if not self.j_min < low < high:
            raise ValueError(f"stability_levels {self.stability_levels} must increase above j_min = {self.j_min}")
        if self.J <= self.j_min or self.predual_J <= self.j_min:
            raise ValueError("J and predual_J must exceed j_min")
        for name in ('ensemble_size', 'bmo_ensemble_size', 'pair_count', 'predual_ensemble_size',
                     'predual_partners'):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.band_ratio[0] <= 1.0 <= self.band_ratio[1]:
            raise ValueError(f"band_ratio {self.band_ratio} must bracket 1")
        return self

    @classmethod
    def resolve(cls, path: Optional[str] = None, **overrides) -> "VerifyConfig":
        """Defaults, then the YAML file, then the explicit overrides that are not None."""
        data = {}
        if path:
            try:
                with open(path) as stream:
                    loaded = yaml.safe_load(stream)
            except yaml.YAMLError as e:
                mark = getattr(e, 'problem_mark', None)
                raise ParseError(f"malformed config {path}: {e}",
                                 line=mark.line + 1 if mark else None) from e
            if loaded is not None and not isinstance(loaded, dict):
                raise ParameterError(f"config {path} must be a mapping")
            data.update(loaded or {})
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except ValidationError as e:
            error = e.errors()[0]
            field = ".".join(str(x) for x in error['loc']) or "config"
            raise ParameterError(f"config field '{field}': {error['msg']}") from e

    def geometry(self, J: Optional[int] = None) -> GridGeometry:
        return GridGeometry.create(self.n, self.j_min, self.J if J is None else J)

    @property
    def params(self) -> SpaceParams:
        return SpaceParams.of(self.p, self.q)


class VerificationSuite(ABC):

    def __init__(self, config: VerifyConfig, command: str = ""):
        self._config = config
        self._table = ReportTable(
            ReportMetadata(command=command or f"verify {self.name}", seed=config.seed,
                           geometry=str(config.geometry()),
                           parameters=config.model_dump(mode='json')),
            COLUMNS,
        )
        self._failing: List[str] = []

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def run(self):
        raise NotImplementedError()

    @property
    def config(self) -> VerifyConfig:
        return self._config

    @property
    def table(self) -> ReportTable:
        return self._table

    @property
    def failing(self) -> List[str]:
        return self._failing

    @property
    def passed(self) -> bool:
        return not self._failing

    def measure(self, check: str, J: Optional[int] = None, parameters: str = "", lower: float = None,
                upper: float = None, value: float = None):
        self._table.add_row(check=check, J=J, parameters=parameters, lower=lower, upper=upper, value=value)

    def gate(self, check: str, passed: bool, J: Optional[int] = None, parameters: str = "",
             value: float = None, lower: float = None, upper: float = None):
        passed = bool(passed)
        self._table.add_row(check=check, J=J, parameters=parameters, lower=lower, upper=upper,
                            value=value, passed=passed)
        label = f"{check}[{parameters}]" if parameters else check
        log.info(f"{self.name}: {label} {'PASS' if passed else 'FAIL'}")
        if not passed:
            self._failing.append(label)

    def stability_gate(self, check: str, bands: Dict[int, EquivalenceBand], parameters: str,
                       two_sided: bool = True):
        """Record a band per level, then gate finiteness and the fine/coarse constant ratio."""
        low, high = self._config.stability_levels
        for J, band in bands.items():
            self.measure(check, J=J, parameters=parameters, lower=band.lower, upper=band.upper,
                         value=band.spread)
        window_low, window_high = self._config.band_ratio
        sides = ('lower', 'upper') if two_sided else ('upper',)
        for side in sides:
            coarse, fine = getattr(bands[low], side), getattr(bands[high], side)
            finite = all(b.finite if two_sided else np.isfinite(b.upper) and b.upper > 0.0
                         for b in bands.values())
            ratio = fine / coarse if finite and coarse > 0.0 else float('inf')
            self.gate(f"{check}_{side}_stability", finite and window_low <= ratio <= window_high,
                      parameters=parameters, value=ratio, lower=window_low, upper=window_high)

    def ensemble(self, geometry: GridGeometry, size: Optional[int] = None, offset: int = 0) -> List[GridFunction]:
        return random_ensemble(geometry, size or self._config.ensemble_size, self._config.seed + offset,
                               self._config.theta)

    def symbols(self, geometry: GridGeometry, size: Optional[int] = None) -> List[GridFunction]:
        return bmo_normalized_ensemble(geometry, size or self._config.bmo_ensemble_size,
                                       self._config.seed + 1, self._config.theta)

    def nested(self, geometry: GridGeometry, size: Optional[int] = None, offset: int = 0,
               bmo_normalized: bool = False) -> NestedEnsemble:
        """Members refined from the coarsest stability level plus members drawn on geometry."""
        c = self._config
        return nested_ensemble(c.geometry(min(c.stability_levels)), geometry, size or c.ensemble_size,
                               c.seed + offset, c.theta, bmo_normalized)

    def execute(self) -> ReportTable:
        log.info(f"running suite {self.name}")
        self.run()
        return self._table


def _pq(params) -> str:
    return f"p={params[0]:g} q={params[1]:g}"


def _paired(symbols: NestedEnsemble, functions: NestedEnsemble) -> List[Tuple[GridFunction, GridFunction]]:
    """Symbol i mod k with function i, within the coarse part and within the fresh part."""
    pairs = []
    for a, f in ((symbols.coarse, functions.coarse), (symbols.fresh, functions.fresh)):
        if a:
            pairs.extend((a[i % len(a)], h) for i, h in enumerate(f))
    return pairs


class SquareFunctionSuite(VerificationSuite):
    """Morrey norm against the square function, with and without a mean."""

    @property
    def name(self) -> str:
        return 'thm1'

    def run(self):
        c = self._config
        for pair in c.pairs:
            params = SpaceParams.of(*pair)
            bands, shifted = {}, {}
            for J in c.stability_levels:
                g = c.geometry(J)
                functions = self.ensemble(g)
                bands[J] = square_function_band(functions, params)
                rng = SplitMix64(c.seed + 5)
                shifts = rng.uniform(len(functions), -1.0, 1.0)
                shifted[J] = mean_band([f + float(s) for f, s in zip(functions, shifts)], params)
            self.stability_gate('square_function_band', bands, _pq(pair))
            self.stability_gate('mean_band', shifted, _pq(pair))
            g = c.geometry()
            pure = square_function_band(pure_haar_ensemble(g, c.ensemble_size, c.seed), params)
            self.gate('pure_haar_band_finite', pure.finite, J=g.finest_level, parameters=_pq(pair),
                      lower=pure.lower, upper=pure.upper)


class HaarEquivalenceSuite(VerificationSuite):
    """Lebesgue norms against the square function plus the exact L^2 identities."""

    @property
    def name(self) -> str:
        return 'prop21'

    def run(self):
        c = self._config
        for q in c.lebesgue_exponents:
            bands = {J: lebesgue_band(self.ensemble(c.geometry(J)), q) for J in c.stability_levels}
            self.stability_gate('lebesgue_band', bands, f"q={q:g}")

        g = c.geometry()
        parseval = oscillation = expansion = 0.0
        k = (g.coarsest_level + g.finest_level) // 2
        for f in self.ensemble(g, c.pair_count):
            coefficients = forward_transform(f)
            energy = float(np.sum(f.values ** 2) * g.cell_measure)
            haar = coefficients.base_mean ** 2 * g.base_cube.measure + float(np.sum(coefficients.to_vector() ** 2))
            parseval = max(parseval, abs(energy - haar) / max(energy, 1e-300))
            local, direct = local_energy(coefficients), oscillation_energies(f)
            for j in g.levels:
                scale = max(float(direct[j].max()), 1e-300)
                oscillation = max(oscillation, float(np.abs(local[j] - direct[j]).max()) / scale)
            rebuilt = expectation_projection(f, k)
            for j in g.haar_levels:
                if j >= k:
                    rebuilt = rebuilt + level_slice(coefficients, j)
            expansion = max(expansion, float(np.abs(rebuilt.values - f.values).max()))
        self.gate('parseval', parseval <= 1e-10, J=g.finest_level, value=parseval, upper=1e-10)
        self.gate('local_oscillation_identity', oscillation <= c.identity_tolerance, J=g.finest_level,
                  value=oscillation, upper=c.identity_tolerance)
        self.gate('nonhomogeneous_expansion', expansion <= c.identity_tolerance, J=g.finest_level,
                  parameters=f"k={k}", value=expansion, upper=c.identity_tolerance)


class ParaproductSuite(VerificationSuite):

    @property
    def name(self) -> str:
        return 'thm2'

    def run(self):
        c = self._config
        for pair in c.pairs:
            params = SpaceParams.of(*pair).require_strict()
            bands = {}
            for J in c.stability_levels:
                g = c.geometry(J)
                symbols, functions = self.symbols(g), self.ensemble(g)
                images = [morrey_value(paraproduct(symbols[i % len(symbols)], f), params)
                          for i, f in enumerate(functions)]
                bands[J] = equivalence_band(images, [morrey_value(f, params) for f in functions])
            self.stability_gate('paraproduct_band', bands, _pq(pair), two_sided=False)

        # BMO recovered from the paraproduct on L^2
        g = c.geometry()
        functions = self.ensemble(g, c.pair_count)
        symbols = self.symbols(g, c.pair_count)
        ratios = [paraproduct_bmo_norm(a, 2.0, functions) for a in symbols]
        self.gate('paraproduct_characterizes_bmo', all(np.isfinite(ratios)) and min(ratios) > 0.0,
                  J=g.finest_level, parameters="q=2", lower=min(ratios), upper=max(ratios))


class FractionalIntegralSuite(VerificationSuite):

    @property
    def name(self) -> str:
        return 'thm3'

    def run(self):
        c = self._config
        params = c.params
        for alpha in c.alphas:
            target = FractionalParams.of(alpha, c.n).target(params)
            label = f"alpha={alpha:g} {_pq((c.p, c.q))} s={target.p:g} t={target.q:g}"
            bands, violations = {}, 0
            for J in c.stability_levels:
                functions = self.nested(c.geometry(J)).members
                images = [morrey_value(fractional_integral(f, alpha), target) for f in functions]
                bands[J] = equivalence_band(images, [morrey_value(f, params) for f in functions])
                if J == max(c.stability_levels):
                    violations = sum(pointwise_majorant(f, alpha, c.p, c.q).violations() for f in functions)
            self.stability_gate('fractional_integral_band', bands, label, two_sided=False)
            self.gate('pointwise_majorant', violations == 0, J=max(c.stability_levels), parameters=label,
                      value=float(violations))


class CommutatorSuite(VerificationSuite):

    @property
    def name(self) -> str:
        return 'thm4'

    def run(self):
        c = self._config
        params = c.params
        for alpha in c.alphas:
            target = FractionalParams.of(alpha, c.n).target(params)
            bands = {}
            for J in c.stability_levels:
                g = c.geometry(J)
                symbols = self.nested(g, c.bmo_ensemble_size, 1, bmo_normalized=True)
                pairs = _paired(symbols, self.nested(g))
                images = [morrey_value(commutator_direct(a, f, alpha), target) for a, f in pairs]
                bands[J] = equivalence_band(images, [morrey_value(f, params) for _, f in pairs])
            self.stability_gate('commutator_band', bands, f"alpha={alpha:g} {_pq((c.p, c.q))}",
                                two_sided=False)


class CubeTestingSuite(VerificationSuite):

    @property
    def name(self) -> str:
        return 'thm5'

    def run(self):
        c = self._config
        params = c.params
        alpha = c.alphas[0]
        # the Haar test functions are normalized numerically; both closed-form readings are recorded
        readings = f"exponents 1/p-1/2={1.0 / c.p - 0.5:g} -1/p-1/2={-1.0 / c.p - 0.5:g}"
        bands, probes = {}, {}
        for J in c.stability_levels:
            g = c.geometry(J)
            symbols = self.nested(g, c.bmo_ensemble_size, 1, bmo_normalized=True)
            rows = theorem5_report(symbols.members, alpha, params, self.nested(g, c.pair_count).members)
            bands[J] = equivalence_band([r.bmo for r in rows], [r.lower for r in rows])
            probes[J] = equivalence_band([r.probe for r in rows], [r.bmo for r in rows])
            sides = equivalence_band([r.bmo_side for r in rows], [r.bmo for r in rows])
            self.measure('bmo_side_over_bmo', J=J, parameters=readings, lower=sides.lower, upper=sides.upper)
        label = f"alpha={alpha:g} {_pq((c.p, c.q))}"
        self.stability_gate('bmo_over_cube_testing', bands, label, two_sided=False)
        self.stability_gate('probe_over_bmo', probes, label, two_sided=False)


class PredualSuite(VerificationSuite):

    @property
    def name(self) -> str:
        return 'thm6'

    def run(self):
        c = self._config
        g = c.geometry(c.predual_J)
        bp, bq = c.predual_pq
        block_params = PredualParams.of(bp, bq)
        dual = block_params.conjugate()
        functions = self.ensemble(g, c.predual_ensemble_size, offset=2)
        partners = self.ensemble(g, c.predual_partners, offset=3)
        partner_norms = [morrey_value(h, dual) for h in partners]
        label = _pq(c.predual_pq)

        bracket = holder = 0
        gaps, decompositions, uppers = [], [], []
        for f in functions:
            upper, decomposition = block_norm_upper(f, bp, bq)
            lower = block_norm_lower(f, bp, bq)
            bracket += lower > upper + 1e-9
            gaps.append(upper - lower)
            decompositions.append(decomposition)
            uppers.append(upper)
            holder += sum(abs(pairing(f, h)) > upper * norm * (1.0 + 1e-9) + 1e-12
                          for h, norm in zip(partners, partner_norms))
        J = g.finest_level
        self.measure('duality_gap', J=J, parameters=label, lower=min(gaps), upper=max(gaps))
        self.gate('duality_bracket', bracket == 0, J=J, parameters=label, value=float(bracket))
        self.gate('holder_pairing', holder == 0, J=J, parameters=label, value=float(holder))

        triangle = 0.0
        for i in range(min(10, len(functions) - 1)):
            combined, _ = block_norm_upper(functions[i] + functions[i + 1], bp, bq,
                                           initial=decompositions[i] + decompositions[i + 1])
            triangle = max(triangle, combined - uppers[i] - uppers[i + 1])
        self.gate('upper_triangle_inequality', triangle <= 1e-6, J=J, parameters=label, value=triangle,
                  upper=1e-6)

        rng = SplitMix64(c.seed + 2)
        worst = 0.0
        for level in g.levels:
            support = DyadicCube(level=level, index=(0,) * g.dimension)
            block = random_block(g, support, block_params, rng)
            worst = max(worst, block_norm_upper(block, bp, bq)[0])
        self.gate('single_block_upper', worst <= 1.0 + 1e-9, J=J, parameters=label, value=worst,
                  upper=1.0 + 1e-9)

        alpha = c.alphas[0]
        ratios = predual_fractional_ratios(functions[:5], alpha, c.params)
        self.measure('fractional_predual_ratio', J=J, parameters=f"alpha={alpha:g} {_pq((c.p, c.q))}",
                     lower=max(r.certified for r in ratios), upper=max(r.bracket for r in ratios))


class CompactnessSuite(VerificationSuite):

    @property
    def name(self) -> str:
        return 'thm7'

    def run(self):
        c = self._config
        g = c.geometry()
        alpha = c.alphas[0]
        last = g.finest_level - 1
        L_grid = list(range(max(g.coarsest_level, 0), g.finest_level))
        top = max_index_radius(g, last)
        R_grid = sorted({0.0, top} | {float(2 ** k) for k in range(int(np.log2(top)) + 1 if top >= 1 else 0)})
        probes = self.ensemble(g, 10)

        rng = SplitMix64(c.seed + 4)
        sparse = [sparse_haar_span(g, rng) for _ in range(5)]
        ladder = scale_ladder(g)
        generic = self.symbols(g, 3)
        candidates = [('sparse', a) for a in sparse] + [('ladder', ladder)] + [('random', a) for a in generic]

        monotone, probe_monotone = True, True
        for kind, a in candidates:
            report = compactness_diagnostic(a, alpha, c.params, L_grid, R_grid, probes)
            monotone &= report.monotone
            probe_monotone &= report.high.monotone and report.low.monotone
            if kind == 'sparse':
                self.gate('vmo_distance_reaches_zero', report.vmo_distance.reaches_zero(), J=g.finest_level,
                          value=min(report.vmo_distance.values))
            if kind == 'ladder':
                floor = min(v for L, v in zip(L_grid, report.vmo_distance.values) if L < last) \
                    if len(L_grid) > 1 else 0.0
                self.gate('ladder_vmo_floor', floor > 1e-12, J=g.finest_level, value=floor)
        self.gate('decay_profiles_monotone', monotone, J=g.finest_level)
        self.measure('probe_tails_monotone', J=g.finest_level, value=float(probe_monotone))


class DecompositionSuite(VerificationSuite):

    @property
    def name(self) -> str:
        return 'decomp'

    def run(self):
        c = self._config
        g = c.geometry()
        J = g.finest_level
        rng = SplitMix64(c.seed)
        pairs = [(random_haar_function(g, rng, c.theta), random_haar_function(g, rng, c.theta))
                 for _ in range(c.pair_count)]
        for alpha in c.alphas:
            residual = max(decomposition_residual(a, f, alpha) for a, f in pairs)
            self.gate('commutator_decomposition', residual < c.identity_tolerance, J=J,
                      parameters=f"alpha={alpha:g}", value=residual, upper=c.identity_tolerance)

            eigen = 0.0
            for eps, q in haar_basis(g):
                h = haar_function(eps, q, g)
                error = fractional_integral(h, alpha) - h * q.measure ** (alpha / g.dimension)
                eigen = max(eigen, float(np.abs(error.values).max()) * q.measure ** 0.5)
            self.gate('eigen_relation', eigen <= 1e-12, J=J, parameters=f"alpha={alpha:g}", value=eigen,
                      upper=1e-12)

        round_trip = max(
            float(np.abs(inverse_transform(forward_transform(f)).values - f.values).max())
            / max(float(np.abs(f.values).max()), 1e-300)
            for f, _ in pairs
        )
        self.gate('haar_round_trip', round_trip <= 1e-12, J=J, value=round_trip, upper=1e-12)


SUITES = {
    'thm1': SquareFunctionSuite,
    'prop21': HaarEquivalenceSuite,
    'thm2': ParaproductSuite,
    'thm3': FractionalIntegralSuite,
    'thm4': CommutatorSuite,
    'thm5': CubeTestingSuite,
    'thm6': PredualSuite,
    'thm7': CompactnessSuite,
    'decomp': DecompositionSuite,
}


def create_suite(name: str, config: VerifyConfig, command: str = "") -> VerificationSuite:
    if name not in SUITES:
        raise ParameterError(f"unknown suite '{name}', expected one of {', '.join(SUITES)}")
    return SUITES[name](config, command)
