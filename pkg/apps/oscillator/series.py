"""
Polynomial extrapolation of sampled series in extended precision.

A quantity y(h) = a0 + a1 h + a2 h^2 + ... is sampled on a geometric ladder
of h values; the interpolating polynomial through all samples gives the
Richardson estimates of a0, a1, ... Convergence is judged by refitting
without the coarsest sample.
"""

import logging
from typing import List, Sequence, Tuple

from apps.common.exceptions import ExtractionError

logger = logging.getLogger('apps.oscillator')


def fit_power_series(ctx, h_values: Sequence, y_values: Sequence) -> List:
    """Coefficients a_k of the polynomial in h through every (h, y) sample."""
    if len(h_values) != len(y_values) or not h_values:
        raise ExtractionError("Ladder needs matching, non-empty samples")
    scale = max(abs(h) for h in h_values)
    size = len(h_values)
    # columns scaled by u = h/scale keep the Vandermonde system well conditioned
    vandermonde = ctx.matrix(size, size)
    for row, h in enumerate(h_values):
        u = h / scale
        for column in range(size):
            vandermonde[row, column] = u ** column
    rhs = ctx.matrix([y for y in y_values])
    solution = ctx.lu_solve(vandermonde, rhs)
    return [solution[k] / scale ** k for k in range(size)]


def extract_coefficients(ctx, h_values: Sequence, y_values: Sequence, count: int,
                         tolerance: float, zero_tolerance: float, label: str) -> List[Tuple]:
    """
    Fit the ladder and return (a_k, residual_k) for k < count.

    h_values run from coarse to fine. Raises ExtractionError when the fit
    without the coarsest sample moves a_k by more than tolerance times the
    larger of the biggest reported coefficient and max|y| / max(h)^k, the
    size a term of order k could have on this ladder.
    """
    if len(h_values) < count + 2:
        raise ExtractionError(
            f"{label}: ladder of {len(h_values)} samples cannot resolve {count} coefficients",
            samples=len(h_values), coefficients=count,
        )
    full = fit_power_series(ctx, h_values, y_values)
    reduced = fit_power_series(ctx, h_values[1:], y_values[1:])

    reported = full[:count]
    residuals = [abs(full[k] - reduced[k]) for k in range(count)]
    scale = max(max(abs(a) for a in reported), ctx.mpf(zero_tolerance))
    h_max = max(abs(h) for h in h_values)
    y_max = max(abs(y) for y in y_values)
    allowed = [tolerance * max(scale, y_max / h_max ** k) for k in range(count)]

    worst = max(range(count), key=lambda k: residuals[k] / allowed[k])
    if residuals[worst] > allowed[worst]:
        logger.error(
            f"{label}: series extraction did not settle",
            extra={'label': label, 'order_index': worst, 'residual': float(residuals[worst]),
                   'allowed': float(allowed[worst])}
        )
        raise ExtractionError(
            f"{label}: coefficient {worst} moved by {float(residuals[worst]):.3e} when the coarsest sample "
            f"was dropped (allowed {float(allowed[worst]):.3e})",
            residual=float(residuals[worst]), order_index=worst,
        )
    return list(zip(reported, residuals))
