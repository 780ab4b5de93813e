"""Exact half-integer labels.

Half-integers (1/2, 1, 3/2, ...) index Bessel orders, total angular momenta
and their projections.  Storing twice the value as an integer keeps label
arithmetic and dictionary keys exact.
"""

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True, order=True)
class HalfInt:
    """A positive half-integer p, stored exactly as ``twice_value = 2p``."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, int):
            raise TypeError("twice_value must be an int")
        if self.twice_value < 1:
            raise ValueError("half-integer must be >= 1/2")

    @classmethod
    def of(cls, value):
        """Build from 0.5, 1, Fraction(3, 2), '3/2', or another HalfInt."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            value = Fraction(value)
        frac = Fraction(value).limit_denominator(2)
        if frac != Fraction(value):
            raise ValueError(f"{value!r} is not a half-integer")
        return cls(int(frac * 2))

    @property
    def value(self):
        return self.twice_value / 2.0

    @property
    def is_integer(self):
        return self.twice_value % 2 == 0

    def __add__(self, other):
        if isinstance(other, HalfInt):
            return HalfInt(self.twice_value + other.twice_value)
        if isinstance(other, int):
            return HalfInt(self.twice_value + 2 * other)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, HalfInt):
            return HalfInt(self.twice_value - other.twice_value)
        if isinstance(other, int):
            return HalfInt(self.twice_value - 2 * other)
        return NotImplemented

    def __float__(self):
        return self.twice_value / 2.0

    def __str__(self):
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"
