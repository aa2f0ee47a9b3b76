"""LQG exponent bundle: gamma, d_gamma and the derived Q and xi."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidDimension, OutOfRangeGamma, UnknownDimension

GAMMA_PURE_GRAVITY = math.sqrt(8.0 / 3.0)
# d_gamma is only known in closed form at gamma = sqrt(8/3).
D_PURE_GRAVITY = 4.0


@dataclass(frozen=True)
class LqgParams:
    gamma: float
    d_gamma: float
    q: float = field(init=False)
    xi: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.gamma < 2.0:
            raise OutOfRangeGamma(f"gamma must lie in (0, 2), got {self.gamma}")
        if not self.d_gamma > 2.0:
            raise InvalidDimension(f"d_gamma must exceed 2, got {self.d_gamma}")
        object.__setattr__(self, "q", 2.0 / self.gamma + self.gamma / 2.0)
        object.__setattr__(self, "xi", self.gamma / self.d_gamma)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "d_gamma": self.d_gamma, "q": self.q, "xi": self.xi}


def coupling_params(gamma: float, d_gamma: float | None = None) -> LqgParams:
    """Build the exponent bundle for ``gamma``.

    ``d_gamma`` may be omitted only at gamma = sqrt(8/3), where it equals 4.
    For every other gamma its value is unknown and must be supplied.
    """
    gamma = float(gamma)
    if not 0.0 < gamma < 2.0:
        raise OutOfRangeGamma(f"gamma must lie in (0, 2), got {gamma}")
    if d_gamma is None:
        if abs(gamma - GAMMA_PURE_GRAVITY) > 1e-12:
            raise UnknownDimension(
                f"d_gamma is not known for gamma={gamma}; pass it explicitly"
            )
        d_gamma = D_PURE_GRAVITY
    return LqgParams(gamma, float(d_gamma))
