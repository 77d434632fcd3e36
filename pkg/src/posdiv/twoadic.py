"""Fixed-precision model of the 2-adic numbers.

A nonzero value is stored as ``2^val * unit`` with ``unit`` odd and known
modulo ``2^prec``; ``val`` may be negative.  All arithmetic tracks how many
unit bits remain certified, so cancellation in subtraction is auditable
rather than silent.  The Iwasawa logarithm (``Log 2 = Log(-1) = 0``) and the
canonical sign decomposition of the multiplicative group live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DivisionContractError, PrecisionError, ZeroInputError

DEFAULT_PRECISION = 32


@dataclass(frozen=True)
class PrecisionPolicy:
    """Adaptive working-precision schedule for whole-pipeline runs."""

    initial: int = DEFAULT_PRECISION
    growth: int = 16
    stable_runs: int = 2
    max_rounds: int = 6

    def __post_init__(self):
        if self.initial < 8:
            raise ValueError("initial precision must be at least 8 bits")
        if self.growth < 4:
            raise ValueError("growth step must be at least 4 bits")
        if self.stable_runs < 2:
            raise ValueError("need at least 2 agreeing runs to stabilize")


def _v2_int(n: int) -> int:
    return (n & -n).bit_length() - 1


class TwoAdic:
    """An element of Q_2 known to finite precision (or exactly zero).

    Nonzero: ``value = 2^val * unit`` with ``unit`` odd, reduced mod
    ``2^prec``.  Zero: either exact, or "zero to absolute precision
    ``zero_prec``" after catastrophic cancellation.
    """

    __slots__ = ("val", "unit", "prec", "_zero", "zero_prec")

    def __init__(self, val, unit, prec, _zero=False, zero_prec=None):
        if _zero:
            self.val = 0
            self.unit = 0
            self.prec = 0
            self._zero = True
            self.zero_prec = zero_prec  # None means exactly zero
            return
        if prec < 1:
            raise PrecisionError("no certified bits left in 2-adic value")
        unit %= 1 << prec
        if unit % 2 == 0:
            raise ValueError("unit part must be odd")
        self.val = val
        self.unit = unit
        self.prec = prec
        self._zero = False
        self.zero_prec = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(abs_prec=None) -> "TwoAdic":
        return TwoAdic(0, 0, 0, _zero=True, zero_prec=abs_prec)

    @staticmethod
    def from_int(n: int, prec: int = DEFAULT_PRECISION) -> "TwoAdic":
        if n == 0:
            return TwoAdic.zero()
        v = _v2_int(abs(n))
        return TwoAdic(v, n >> v, prec)

    @staticmethod
    def from_rational(num, den=1, prec: int = DEFAULT_PRECISION) -> "TwoAdic":
        if isinstance(num, Fraction):
            num, den = num.numerator, num.denominator
        if num == 0:
            return TwoAdic.zero()
        if den == 0:
            raise ZeroDivisionError("denominator is zero")
        vn, vd = _v2_int(abs(num)), _v2_int(abs(den))
        u = (num >> vn) * pow(den >> vd, -1, 1 << prec)
        return TwoAdic(vn - vd, u, prec)

    @staticmethod
    def coerce(x, prec: int = DEFAULT_PRECISION) -> "TwoAdic":
        if isinstance(x, TwoAdic):
            return x
        if isinstance(x, int):
            return TwoAdic.from_int(x, prec)
        if isinstance(x, Fraction):
            return TwoAdic.from_rational(x, 1, prec)
        raise TypeError(f"cannot interpret {x!r} as a 2-adic number")

    # -- predicates and views -----------------------------------------

    @property
    def is_zero(self) -> bool:
        return self._zero

    @property
    def is_exact_zero(self) -> bool:
        return self._zero and self.zero_prec is None

    @property
    def abs_prec(self):
        """Absolute precision: the value is known modulo 2^abs_prec."""
        if self._zero:
            return self.zero_prec  # None = infinite
        return self.val + self.prec

    def residue(self, bits: int) -> int:
        """The value as an integer mod 2^bits (requires val >= 0)."""
        if self._zero:
            if self.zero_prec is not None and self.zero_prec < bits:
                raise PrecisionError("zero not certified to requested bits")
            return 0
        if self.val < 0:
            raise DivisionContractError("value is not a 2-adic integer")
        if self.val + self.prec < bits:
            raise PrecisionError(
                f"value known mod 2^{self.val + self.prec}, need 2^{bits}"
            )
        return (self.unit << self.val) % (1 << bits)

    def is_integral(self) -> bool:
        return self._zero or self.val >= 0

    def parity(self) -> int:
        """Value mod 2 (for integral values): 1 iff the value is a 2-adic unit."""
        if self._zero:
            return 0
        if self.val < 0:
            raise DivisionContractError("parity of a non-integral value")
        return 1 if self.val == 0 else 0

    # -- arithmetic ----------------------------------------------------

    def _min_abs(self, other):
        a, b = self.abs_prec, other.abs_prec
        if a is None:
            return b
        if b is None:
            return a
        return min(a, b)

    def __add__(self, other):
        other = TwoAdic.coerce(other, self.prec if not self._zero else DEFAULT_PRECISION)
        if self._zero and other._zero:
            ap = self._min_abs(other)
            return TwoAdic.zero(ap)
        if self._zero:
            return other._truncate_abs(self.zero_prec)
        if other._zero:
            return self._truncate_abs(other.zero_prec)
        ap = self._min_abs(other)
        v = min(self.val, other.val)
        width = ap - v
        if width <= 0:
            return TwoAdic.zero(ap)
        m = 1 << width
        s = ((self.unit << (self.val - v)) + (other.unit << (other.val - v))) % m
        if s == 0:
            return TwoAdic.zero(ap)
        sv = _v2_int(s)
        if sv >= width:
            return TwoAdic.zero(ap)
        return TwoAdic(v + sv, s >> sv, width - sv)

    def _truncate_abs(self, abs_prec):
        """Re-certify this value only up to the given absolute precision."""
        if abs_prec is None:
            return self
        if self._zero:
            zp = self.zero_prec
            return TwoAdic.zero(abs_prec if zp is None else min(zp, abs_prec))
        width = abs_prec - self.val
        if width <= 0:
            return TwoAdic.zero(abs_prec)
        return TwoAdic(self.val, self.unit, min(self.prec, width))

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        if self._zero:
            return self
        return TwoAdic(self.val, -self.unit, self.prec)

    def __sub__(self, other):
        return self + (-TwoAdic.coerce(other, self.prec if not self._zero else DEFAULT_PRECISION))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = TwoAdic.coerce(other, self.prec if not self._zero else DEFAULT_PRECISION)
        if self._zero or other._zero:
            # val bounds of the factors push the certified zero window
            zp = None
            if self._zero and self.zero_prec is not None:
                zp = self.zero_prec + (other.val if not other._zero else 0)
            if other._zero and other.zero_prec is not None:
                zp2 = other.zero_prec + (self.val if not self._zero else 0)
                zp = zp2 if zp is None else min(zp, zp2)
            return TwoAdic.zero(zp)
        p = min(self.prec, other.prec)
        return TwoAdic(self.val + other.val, (self.unit * other.unit) % (1 << p), p)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        other = TwoAdic.coerce(other, self.prec if not self._zero else DEFAULT_PRECISION)
        if other._zero:
            raise ZeroDivisionError("division by (certified) zero 2-adic value")
        if self._zero:
            zp = None if self.zero_prec is None else self.zero_prec - other.val
            return TwoAdic.zero(zp)
        p = min(self.prec, other.prec)
        u = (self.unit * pow(other.unit, -1, 1 << p)) % (1 << p)
        return TwoAdic(self.val - other.val, u, p)

    def divide_integral(self, other) -> "TwoAdic":
        """Quotient that is contractually a 2-adic integer."""
        q = self / other
        if not q.is_integral():
            raise DivisionContractError(
                f"quotient has valuation {q.val} < 0"
            )
        return q

    def __pow__(self, n: int):
        if self._zero:
            if n == 0:
                return TwoAdic.from_int(1)
            return TwoAdic.zero()
        if n == 0:
            return TwoAdic(0, 1, self.prec)
        u = pow(self.unit, abs(n), 1 << self.prec)
        r = TwoAdic(self.val * abs(n), u, self.prec)
        return r if n > 0 else TwoAdic.from_int(1, self.prec) / r

    def unit_pow(self, exponent: "TwoAdic") -> "TwoAdic":
        """self**e for a 2-adic integer exponent; requires self a unit.

        Well defined because u^(2^k) tends to 1: the result is certified to
        (roughly) the exponent's own precision.
        """
        if self._zero or self.val != 0:
            raise ValueError("2-adic exponentiation needs a unit base")
        e = TwoAdic.coerce(exponent, self.prec)
        if e._zero:
            return TwoAdic(0, 1, self.prec)
        if not e.is_integral():
            raise DivisionContractError("exponent must be a 2-adic integer")
        bits = min(self.prec, e.abs_prec + 2)
        n = e.residue(e.abs_prec)
        return TwoAdic(0, pow(self.unit, n, 1 << bits), bits)

    # -- comparison / hashing ------------------------------------------

    def same(self, other, bits=None) -> bool:
        """Equality to the shared certified precision (or to `bits`)."""
        other = TwoAdic.coerce(other)
        ap = self._min_abs(other)
        if bits is not None:
            ap = bits if ap is None else min(ap, bits)
        if ap is None:
            return self._zero and other._zero
        d = self - other
        return d._zero or d.val >= ap

    def __repr__(self):
        if self._zero:
            if self.zero_prec is None:
                return "TwoAdic(0)"
            return f"TwoAdic(O(2^{self.zero_prec}))"
        return f"TwoAdic(2^{self.val}*{self.unit} + O(2^{self.val + self.prec}))"


# ---------------------------------------------------------------------------
# Valuation, sign decomposition, logarithm
# ---------------------------------------------------------------------------


def v2(x) -> int:
    """The exponent of 2 in x (rational, integer or TwoAdic); x must be nonzero."""
    if isinstance(x, TwoAdic):
        if x.is_zero:
            raise ZeroInputError("valuation undefined for zero")
        return x.val
    if isinstance(x, Fraction):
        if x == 0:
            raise ZeroInputError("valuation undefined for zero")
        return _v2_int(x.numerator) - _v2_int(x.denominator)
    if isinstance(x, int):
        if x == 0:
            raise ZeroInputError("valuation undefined for zero")
        return _v2_int(abs(x))
    raise TypeError(f"no 2-adic valuation for {x!r}")


def canonical_decompose(x) -> tuple[int, TwoAdic, int]:
    """Write x = 2^n * u * s with u in 1+4Z_2 and s = +-1."""
    x = TwoAdic.coerce(x)
    if x.is_zero:
        raise ZeroInputError("cannot decompose zero")
    if x.prec < 2:
        raise PrecisionError("need at least 2 unit bits for the sign")
    if x.unit % 4 == 1:
        return x.val, TwoAdic(0, x.unit, x.prec), 1
    return x.val, TwoAdic(0, -x.unit, x.prec), -1


def epsilon(x) -> int:
    """Projection onto <-1>: +1 iff the odd part of x is 1 mod 4."""
    if isinstance(x, int) or isinstance(x, Fraction):
        if x == 0:
            raise ZeroInputError("sign projection undefined for zero")
        num = x.numerator if isinstance(x, Fraction) else x
        den = x.denominator if isinstance(x, Fraction) else 1
        num, den = abs(num) * (1 if x > 0 else -1), abs(den)
        nu = num >> _v2_int(abs(num))
        du = den >> _v2_int(den)
        return 1 if (nu * pow(du, -1, 4)) % 4 == 1 else -1
    return canonical_decompose(x)[2]


def _log_unit_square(u: int, abs_bits: int) -> int:
    """log(u^2) for odd u, exact mod 2^abs_bits via the series on 1+8Z_2."""
    work = 1 << (abs_bits + 16)
    t = (u * u - 1) % work
    if t == 0:
        return 0
    acc = 0
    k = 1
    tk = 1
    # v2(t^k / k) >= 3k - bitlen(k); the tail beyond the loop bound is
    # below 2^abs_bits, so the truncation is certified in advance.
    while 3 * k - k.bit_length() <= abs_bits + 2:
        tk = (tk * t) % work
        a = _v2_int(k) if k % 2 == 0 else 0
        odd = k >> a
        term = (tk >> a) * pow(odd, -1, work) % work
        acc = (acc + term) if k % 2 == 1 else (acc - term)
        k += 1
    return acc % (1 << abs_bits)


def iwasawa_log(x, prec: int = DEFAULT_PRECISION) -> TwoAdic:
    """2-adic logarithm with Log 2 = Log(-1) = 0, certified to >= prec bits.

    The power of 2 and the sign are stripped; the odd unit u is reduced via
    Log u = Log(u^2)/2 so the series converges on 1+8Z_2.  The result of a
    unit argument always has valuation >= 2.
    """
    x = TwoAdic.coerce(x, prec + 8)
    if x.is_zero:
        raise ZeroInputError("logarithm of zero")
    if x.prec < prec:
        raise PrecisionError(f"argument certified to {x.prec} bits, need {prec}")
    target = min(prec + 4, x.prec + 2)
    u = x.unit % (1 << (target + 6))
    s = _log_unit_square(u, target + 1)
    if s == 0:
        # certified zero: Log(u) = 0 to the working precision
        return TwoAdic.zero(target)
    assert s % 2 == 0, "log of a square is even 2-adically"
    half = (s // 2) % (1 << target)
    if half == 0:
        return TwoAdic.zero(target)
    v = _v2_int(half)
    if v >= target:
        return TwoAdic.zero(target)
    return TwoAdic(v, half >> v, target - v)
