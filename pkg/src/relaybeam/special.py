"""Inverse error function."""
from __future__ import annotations

import math

from .errors import DomainError

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _initial_guess(x: float) -> float:
    # Giles' single-precision polynomial approximation
    w = -math.log((1.0 - x) * (1.0 + x))
    if w < 5.0:
        w -= 2.5
        p = 2.81022636e-08
        p = 3.43273939e-07 + p * w
        p = -3.5233877e-06 + p * w
        p = -4.39150654e-06 + p * w
        p = 0.00021858087 + p * w
        p = -0.00125372503 + p * w
        p = -0.00417768164 + p * w
        p = 0.246640727 + p * w
        p = 1.50140941 + p * w
    else:
        w = math.sqrt(w) - 3.0
        p = -0.000200214257
        p = 0.000100950558 + p * w
        p = 0.00134934322 + p * w
        p = -0.00367342844 + p * w
        p = 0.00573950773 + p * w
        p = -0.0076224613 + p * w
        p = 0.00943887047 + p * w
        p = 1.00167406 + p * w
        p = 2.83297682 + p * w
    return p * x


def erf_inv(x: float) -> float:
    """y with erf(y) = x, for x in (-1, 1).

    A polynomial first guess is polished with Halley steps on erf (or on
    erfc in the tails, where 1 - x carries the significant digits).
    """
    x = float(x)
    if not -1.0 < x < 1.0:
        raise DomainError(f"erf_inv is defined on (-1, 1), got {x}")
    if x == 0.0:
        return 0.0
    a = abs(x)
    y = _initial_guess(a)
    for _ in range(3):
        if a <= 0.5:
            r = math.erf(y) - a
        else:
            r = (1.0 - a) - math.erfc(y)
        d = _TWO_OVER_SQRT_PI * math.exp(-y * y)
        # Halley: the second derivative of erf is -2 y erf'
        step = r / d
        y -= step / (1.0 + y * step)
    return math.copysign(y, x)
