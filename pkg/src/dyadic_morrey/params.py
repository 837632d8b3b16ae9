"""Exponent tuples and their scaling constraints.

Naming follows the norms they parametrize: a Morrey space M^p_q needs
1 <= q <= p < oo, a block space H^p_q needs 1 < p <= q < oo, and the
fractional integral of order alpha maps M^p_q to M^s_t with
1/s = 1/p - alpha/n and t/s = q/p.

In the predual boundedness statement the Morrey pair (p0, p) maps to (r0, r)
under the same rule, and I_alpha acts from H^{r0'}_{r'} to H^{p0'}_{p'}.
"""
import math

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from dyadic_morrey.errors import ParameterError


def conjugate_exponent(x: float) -> float:
    if x <= 1.0:
        raise ParameterError(f"exponent {x} has no finite conjugate")
    return x / (x - 1.0)


def _build(cls, **kwargs):
    try:
        return cls(**kwargs)
    except ValidationError as e:
        raise ParameterError(e.errors()[0]['msg']) from e


class SpaceParams(BaseModel):
    """Morrey exponents (p, q) with 1 <= q <= p < oo."""
    model_config = ConfigDict(frozen=True)

    p: float
    q: float

    @model_validator(mode='after')
    def _ordering(self):
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ValueError("Morrey exponents must be finite")
        if self.q < 1.0:
            raise ValueError(f"q = {self.q} violates q >= 1")
        if self.q > self.p:
            raise ValueError(f"q = {self.q} > p = {self.p} violates q <= p")
        return self

    @classmethod
    def of(cls, p: float, q: float) -> "SpaceParams":
        return _build(cls, p=p, q=q)

    @classmethod
    def lebesgue(cls, q: float) -> "SpaceParams":
        """M^q_q, whose norm on the truncated domain is the L^q norm of the base cube."""
        return _build(cls, p=q, q=q)

    def require_strict(self):
        if self.q <= 1.0:
            raise ParameterError(f"q = {self.q} violates q > 1")
        return self

    @property
    def dual_of(self) -> "PredualParams":
        """The block space whose dual is this Morrey space."""
        return PredualParams.of(conjugate_exponent(self.p), conjugate_exponent(self.q))

    def __str__(self):
        return f"(p={self.p:g}, q={self.q:g})"


class PredualParams(BaseModel):
    """Block-space exponents (p, q) with 1 < p <= q < oo."""
    model_config = ConfigDict(frozen=True)

    p: float
    q: float

    @model_validator(mode='after')
    def _ordering(self):
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ValueError("block exponents must be finite")
        if self.p <= 1.0:
            raise ValueError(f"p = {self.p} violates p > 1")
        if self.p > self.q:
            raise ValueError(f"p = {self.p} > q = {self.q} violates p <= q")
        return self

    @classmethod
    def of(cls, p: float, q: float) -> "PredualParams":
        return _build(cls, p=p, q=q)

    @property
    def block_exponent(self) -> float:
        """1/q - 1/p, the exponent of |Q| in the block size condition."""
        return 1.0 / self.q - 1.0 / self.p

    def conjugate(self) -> SpaceParams:
        return SpaceParams.of(conjugate_exponent(self.p), conjugate_exponent(self.q))

    def __str__(self):
        return f"(p={self.p:g}, q={self.q:g})"


class FractionalParams(BaseModel):
    """Smoothness index 0 < alpha < n of the dyadic fractional integral."""
    model_config = ConfigDict(frozen=True)

    alpha: float
    dimension: int

    @model_validator(mode='after')
    def _range(self):
        if not 0.0 < self.alpha < self.dimension:
            raise ValueError(f"alpha = {self.alpha} outside (0, {self.dimension})")
        return self

    @classmethod
    def of(cls, alpha: float, n: int) -> "FractionalParams":
        return _build(cls, alpha=alpha, dimension=n)

    def target(self, source: SpaceParams) -> SpaceParams:
        """(s, t) with 1/s = 1/p - alpha/n and t/s = q/p."""
        inverse = 1.0 / source.p - self.alpha / self.dimension
        if inverse <= 0.0:
            raise ParameterError(
                f"1/p - alpha/n = {inverse:g} must be positive for p = {source.p}, alpha = {self.alpha}"
            )
        s = 1.0 / inverse
        return SpaceParams.of(s, s * source.q / source.p)

    def predual_pair(self, source: SpaceParams):
        """Input and output block exponents of I_alpha for the Morrey pair (p0, p)."""
        target = self.target(source)
        return target.dual_of, source.dual_of
