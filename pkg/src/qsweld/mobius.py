"""Mobius transformations with infinity-aware evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Mobius:
    """z -> (a z + b) / (c z + d), with ad - bc != 0."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c) < 1e-30:
            raise ValueError("degenerate Mobius coefficients")

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(1, 0, 0, 1)

    @classmethod
    def affine(cls, scale: complex, offset: complex) -> "Mobius":
        return cls(scale, offset, 0, 1)

    @classmethod
    def inversion(cls) -> "Mobius":
        """J(z) = 1/z."""
        return cls(0, 1, 1, 0)

    @classmethod
    def to_zero_one_inf(cls, q0: complex, q1: complex, qinf: complex
                        ) -> "Mobius":
        """The map sending (q0, q1, qinf) to (0, 1, infinity)."""
        if np.isinf(qinf):
            return cls(1, -q0, 0, q1 - q0)
        if np.isinf(q0):
            return cls(0, q1 - qinf, 1, -qinf)
        if np.isinf(q1):
            return cls(1, -q0, 1, -qinf)
        return cls(q1 - qinf, -q0 * (q1 - qinf), q1 - q0, -qinf * (q1 - q0))

    def apply(self, z):
        z = np.asarray(z, dtype=complex)
        inf = np.isinf(z.real) | np.isinf(z.imag)
        num = self.a * np.where(inf, 1.0, z) + np.where(inf, 0, self.b)
        den = self.c * np.where(inf, 1.0, z) + np.where(inf, 0, self.d)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(np.abs(den) == 0, np.inf + 0j, num / den)
        return out if out.shape else complex(out)

    def __call__(self, z):
        return self.apply(z)

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)

    def compose(self, other: "Mobius") -> "Mobius":
        """self o other."""
        return Mobius(self.a * other.a + self.b * other.c,
                      self.a * other.b + self.b * other.d,
                      self.c * other.a + self.d * other.c,
                      self.c * other.b + self.d * other.d)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        det = self.a * self.d - self.b * self.c
        return det / (self.c * z + self.d) ** 2


def cross_ratio(z, q0, q1, qinf):
    """Image of z under the Mobius map sending (q0, q1, qinf) to (0,1,inf)."""
    return Mobius.to_zero_one_inf(q0, q1, qinf).apply(z)
