"""Exact element arithmetic for quadratic fields.

Elements are (a + b*sqrt(m))/den with integer a, b, den, kept in lowest
terms.  Everything downstream that needs signs, norms or valuations of a
concrete element goes through this representation, so no floating point is
involved anywhere.
"""

from __future__ import annotations

import math
from fractions import Fraction


class QuadElem:
    """(a + b*sqrt(m)) / den in Q(sqrt(m)), m squarefree."""

    __slots__ = ("m", "a", "b", "den")

    def __init__(self, m, a, b=0, den=1):
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if any(isinstance(x, Fraction) for x in (a, b, den)):
            fa, fb = Fraction(a) / Fraction(den), Fraction(b) / Fraction(den)
            lcm = fa.denominator * fb.denominator // math.gcd(
                fa.denominator, fb.denominator
            )
            a, b, den = int(fa * lcm), int(fb * lcm), lcm
        if den < 0:
            a, b, den = -a, -b, -den
        g = math.gcd(math.gcd(abs(a), abs(b)), den)
        if g > 1:
            a, b, den = a // g, b // g, den // g
        self.m = m
        self.a = a
        self.b = b
        self.den = den

    @staticmethod
    def one(m):
        return QuadElem(m, 1)

    @staticmethod
    def from_rational(m, q):
        q = Fraction(q)
        return QuadElem(m, q.numerator, 0, q.denominator)

    def is_zero(self):
        return self.a == 0 and self.b == 0

    def is_rational(self):
        return self.b == 0

    def __eq__(self, other):
        return (
            isinstance(other, QuadElem)
            and self.m == other.m
            and (self.a, self.b, self.den) == (other.a, other.b, other.den)
        )

    def __hash__(self):
        return hash((self.m, self.a, self.b, self.den))

    def __add__(self, other):
        other = self._coerce(other)
        return QuadElem(
            self.m,
            self.a * other.den + other.a * self.den,
            self.b * other.den + other.b * self.den,
            self.den * other.den,
        )

    def __neg__(self):
        return QuadElem(self.m, -self.a, -self.b, self.den)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        other = self._coerce(other)
        return QuadElem(
            self.m,
            self.a * other.a + self.m * self.b * other.b,
            self.a * other.b + self.b * other.a,
            self.den * other.den,
        )

    def conj(self):
        return QuadElem(self.m, self.a, -self.b, self.den)

    def norm(self) -> Fraction:
        return Fraction(self.a * self.a - self.m * self.b * self.b, self.den * self.den)

    def trace(self) -> Fraction:
        return Fraction(2 * self.a, self.den)

    def inverse(self):
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        c = self.conj()
        # 1/x = conj(x)/N(x)
        return QuadElem(self.m, c.a * n.denominator, c.b * n.denominator, c.den * n.numerator)

    def __truediv__(self, other):
        other = self._coerce(other)
        return self * other.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        r = QuadElem.one(self.m)
        base = self
        while k:
            if k & 1:
                r = r * base
            base = base * base
            k >>= 1
        return r

    def _coerce(self, other):
        if isinstance(other, QuadElem):
            if other.m != self.m:
                raise ValueError("mixed fields")
            return other
        if isinstance(other, int):
            return QuadElem(self.m, other)
        if isinstance(other, Fraction):
            return QuadElem.from_rational(self.m, other)
        raise TypeError(f"cannot coerce {other!r}")

    def sign_at(self, positive_root: bool) -> int:
        """Sign of the real embedding sending sqrt(m) to +/-sqrt(m); m > 0."""
        if self.m <= 0:
            raise ValueError("real embeddings need m > 0")
        if self.is_zero():
            raise ZeroDivisionError("sign of zero")
        b = self.b if positive_root else -self.b
        a = self.a
        if b == 0:
            return 1 if a > 0 else -1
        if a == 0:
            return 1 if b > 0 else -1
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # opposite signs: compare a^2 with m b^2
        big_a = a * a > self.m * b * b
        return (1 if a > 0 else -1) if big_a else (1 if b > 0 else -1)

    def __repr__(self):
        if self.b == 0:
            core = f"{self.a}"
        elif self.a == 0:
            core = f"{self.b}*sqrt({self.m})"
        else:
            core = f"{self.a}{'+' if self.b > 0 else '-'}{abs(self.b)}*sqrt({self.m})"
        return core if self.den == 1 else f"({core})/{self.den}"
