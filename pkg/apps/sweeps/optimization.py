"""
Golden-section search for the minimum of a unimodal function on [a, b].
"""

import math
from typing import Callable

from apps.common.exceptions import DomainError
from .models import GoldenSectionResult

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQUARE = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section_minimize(function: Callable[[float], float], a: float, b: float,
                            tolerance: float) -> GoldenSectionResult:
    """
    Shrink [a, b] by the golden ratio until it is narrower than tolerance.

    The returned x is the better of the two interior points, so both
    neighbours at the final bracket ends are no lower than f(x) when f is
    unimodal.
    """
    if tolerance <= 0.0:
        raise DomainError(f"Golden-section tolerance must be positive, got {tolerance!r}")
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tolerance:
        x = 0.5 * (a + b)
        return GoldenSectionResult(x=x, value=function(x), low=a, high=b, evaluations=1)

    steps = int(math.ceil(math.log(tolerance / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = function(c)
    yd = function(d)
    evaluations = 2

    for _ in range(steps - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= INV_PHI
            c = a + INV_PHI_SQUARE * h
            yc = function(c)
        else:
            a, c, yc = c, d, yd
            h *= INV_PHI
            d = a + INV_PHI * h
            yd = function(d)
        evaluations += 1

    if yc < yd:
        return GoldenSectionResult(x=c, value=yc, low=a, high=d, evaluations=evaluations)
    return GoldenSectionResult(x=d, value=yd, low=c, high=b, evaluations=evaluations)
