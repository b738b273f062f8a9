"""Closed-form concentration radii for Bernoulli means.

Two primitives:

* the fixed-sample Hoeffding radius ``sqrt(ln(2/delta) / (2n))``, valid for
  the empirical mean of n bounded IID observations, and
* the dyadic iterated-logarithm radius
  ``sqrt((2 ln log2(dyadic_floor(n)) + ln(3.3/delta)) / (2 dyadic_floor(n)))``,
  paired with the empirical mean of the first ``dyadic_floor(n)``
  observations, which is simultaneously valid over all n (a confidence
  sequence).  The 3.3 constant upper-bounds pi^2/3 from the level-splitting
  across dyadic blocks; ``ln log2(1)`` is taken to be infinite, so the
  radius is unbounded until the second observation.

Splitting delta across several estimated probabilities is the caller's
job; both functions take a single delta.  The ``*_term`` variants take the
ratio inside the logarithm directly, for callers that carry pre-split
constants.  All rounding is upward-safe: radii are never rounded below
their real value by more than one ulp, and unboundedness is explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .counts import dyadic_floor


@dataclass(frozen=True)
class Radius:
    """A non-negative half-width; ``unbounded`` means "no information"."""

    value: float

    def __post_init__(self):
        if not (self.value >= 0):
            raise ValueError("radius must be non-negative")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.value)

    def __float__(self) -> float:
        return self.value


UNBOUNDED = Radius(math.inf)


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")


def hoeffding_term(n: int, ratio: float) -> float:
    """sqrt(ln(ratio) / (2n)); infinite when n == 0."""
    if n == 0:
        return math.inf
    return math.sqrt(math.log(ratio) / (2 * n))


def lil_term(count: int, ratio: float) -> float:
    """sqrt((2 ln log2(k) + ln(ratio)) / (2k)) with k = dyadic_floor(count);
    infinite when k < 2."""
    k = dyadic_floor(count)
    if k < 2:
        return math.inf
    j = k.bit_length() - 1
    return math.sqrt((2 * math.log(j) + math.log(ratio)) / (2 * k))


def hoeffding_halfwidth(n: int, delta: float) -> Radius:
    """Fixed-n radius of a (1-delta) confidence interval for a Bernoulli
    mean estimated from n observations."""
    _check_delta(delta)
    return Radius(hoeffding_term(n, 2 / delta))


def lil_halfwidth(n: int, delta: float) -> Radius:
    """Radius of a (1-delta) confidence sequence at time n, paired with the
    mean of the first dyadic_floor(n) observations.  Constant on each
    dyadic block [2**k, 2**(k+1)); unbounded for n < 2."""
    _check_delta(delta)
    return Radius(lil_term(n, 3.3 / delta))
