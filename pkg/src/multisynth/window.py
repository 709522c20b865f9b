"""Homodyne acceptance windows.

Quadratures follow x = (a + a^dagger)/sqrt(2), so the vacuum has variance 1/2
and the shot-noise standard deviation is ``SIGMA0 = 1/sqrt(2)``. Window
centres and widths are stored in units of ``SIGMA0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

SIGMA0 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class HomodyneWindow:
    theta: float = 0.0
    x0: float = 0.0
    dx: float = math.inf

    def __post_init__(self):
        if not (self.dx > 0):
            raise ValueError(f"window width dx must be > 0 (got {self.dx})")
        theta = float(self.theta) % (2 * math.pi)
        if theta >= 2 * math.pi:  # tiny negative angles round up to 2*pi
            theta = 0.0
        object.__setattr__(self, "theta", theta)

    @classmethod
    def infinite(cls, theta: float = 0.0) -> "HomodyneWindow":
        return cls(theta=theta, x0=0.0, dx=math.inf)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.dx)

    def bounds(self) -> tuple[float, float]:
        """Window edges in natural quadrature units."""
        half = 0.5 * self.dx * SIGMA0
        centre = self.x0 * SIGMA0
        return centre - half, centre + half
