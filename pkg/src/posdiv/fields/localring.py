"""Dyadic completions presented by a monic factor of the defining polynomial.

Everything needed from a completion F_q of degree e*f over Q_2:
local norms (resultants against the factor), square tests by bounded
enumeration plus a Hensel lifting bound, a topological generating set of
the unit group modulo squares, and the classification facts (signed /
exceptional / degree valuation) that quadratic fields get in closed form.
"""

from __future__ import annotations

from ..errors import PosdivError
from ..twoadic import TwoAdic, iwasawa_log


def resultant_int(a, b):
    """Resultant of two integer polynomials (ascending coefficients),
    exact, via fraction-free elimination of the Sylvester matrix."""
    da = len(a) - 1
    db = len(b) - 1
    if da < 0 or db < 0:
        return 0
    n = da + db
    rows = []
    for i in range(db):
        rows.append([0] * i + list(reversed(a)) + [0] * (db - 1 - i))
    for i in range(da):
        rows.append([0] * i + list(reversed(b)) + [0] * (da - 1 - i))
    # Bareiss
    m = [row[:] for row in rows]
    denom = 1
    sign = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if m[i][k]), None)
            if piv is None:
                continue
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // denom
            m[i][k] = 0
        denom = m[k][k] if m[k][k] else denom
    return sign * m[n - 1][n - 1]


class LocalRing:
    """(Z/2^K)[t]/(g) for a monic local factor g of known (e, f)."""

    def __init__(self, g_coeffs, e, f, prec_bits, uniformizer=None):
        self.g = [int(c) for c in g_coeffs]  # ascending, monic
        if self.g[-1] != 1:
            raise PosdivError("local factor must be monic")
        self.deg = len(self.g) - 1
        if self.deg != e * f:
            raise PosdivError("local factor degree differs from e*f")
        self.e = e
        self.f = f
        self.prec = prec_bits
        # uniformizer as a polynomial in t (None: 2 works when e = 1)
        if uniformizer is None and e > 1:
            raise PosdivError("ramified completion needs an explicit uniformizer")
        self.pi = uniformizer if uniformizer is not None else [2]

    # -- ring arithmetic ---------------------------------------------------

    def _mulmod(self, a, b, bits):
        mod = 1 << bits
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] = (out[i + j] + x * y) % mod
        # reduce by monic g
        for i in range(len(out) - 1, self.deg - 1, -1):
            c = out[i]
            if c:
                for j in range(self.deg + 1):
                    out[i - self.deg + j] = (out[i - self.deg + j] - c * self.g[j]) % mod
        return [x % mod for x in out[: self.deg]] + [0] * max(0, self.deg - len(out))

    def norm(self, poly, bits=None) -> TwoAdic:
        """Norm to Q_2 of an element with integer polynomial rep."""
        bits = bits or self.prec
        r = resultant_int([c % (1 << (bits + 8)) for c in self.g], list(poly))
        from . import two_adic_mod

        return two_adic_mod(r, bits)

    def valuation(self, poly) -> int:
        n = self.norm(poly, self.prec)
        if n.is_zero:
            raise PosdivError("valuation exceeded the precision window")
        if n.val % self.f:
            raise PosdivError("norm valuation not a multiple of f")
        return n.val // self.f

    # -- generating set -----------------------------------------------------

    def unit_generators(self):
        """Multiplicative generators modulo squares: the uniformizer, -1,
        and 1 + r*pi^j for 1 <= j <= 2e over nonzero residues r."""
        gens = [list(self.pi), [-1]]
        residues = []
        for mask in range(1, 1 << self.deg):
            residues.append([(mask >> i) & 1 for i in range(self.deg)])
        pij = [1]
        for j in range(1, 2 * self.e + 1):
            pij = self._mulmod(pij, self.pi, self.prec + 8)
            for r in residues:
                term = self._mulmod(r, pij, self.prec + 8)
                elem = [(1 if i == 0 else 0) + term[i] if i < len(term) else 0 for i in range(self.deg)]
                gens.append(elem)
        return gens

    # -- square tests ---------------------------------------------------------

    def _enumerate_elements(self, bits):
        mod = 1 << bits
        total = mod**self.deg
        if total > 1 << 22:
            raise PosdivError("completion too large for square enumeration")
        for idx in range(total):
            v = []
            x = idx
            for _ in range(self.deg):
                v.append(x % mod)
                x //= mod
            yield v

    def is_square_unit(self, c_poly) -> bool:
        """Is the unit c a square?  z^2 = c mod 8 suffices by Hensel
        (the defect 2*v(2z)+1 = 2e+1 <= 3e is reached)."""
        bits = 3
        mod = 1 << bits
        target = [x % mod for x in c_poly] + [0] * (self.deg - len(c_poly))
        target = target[: self.deg]
        for z in self._enumerate_elements(bits):
            if self._mulmod(z, z, bits) == target:
                # z must be a unit: odd norm
                n = resultant_int(self.g, [x if x else 0 for x in z] or [0])
                if n % 2:
                    return True
        return False

    def is_square_2(self) -> bool:
        """Is 2 a square in the completion?"""
        if self.e % 2:
            return False
        bits = 4
        mod = 1 << bits
        target = [2] + [0] * (self.deg - 1)
        for z in self._enumerate_elements(bits):
            if self._mulmod(z, z, bits) == target:
                return True
        return False

    # -- classification ---------------------------------------------------------

    def degree_lattice_min(self, prec):
        """The Log-of-norm of minimal valuation over the generating set."""
        best = None
        for gen in self.unit_generators():
            n = self.norm(gen, prec + 12)
            if n.is_zero:
                raise PosdivError("generator norm vanished at precision")
            lg = iwasawa_log(n, prec + 6)
            if lg.is_zero:
                continue
            if best is None or lg.val < best.val:
                best = -lg
        if best is None:
            raise PosdivError("no generator with nonzero log-norm")
        return best

    def classification_facts(self, prec=32):
        """(in PS, in PE, v2(deg q)) computed from scratch."""
        ps = not self.is_square_unit([-1])
        deg = self.degree_lattice_min(prec)
        pe = False
        if ps:
            from ..twoadic import epsilon

            for gen in self.unit_generators():
                n = self.norm(gen, prec + 12)
                sg = epsilon(n)
                lg = iwasawa_log(n, prec + 6)
                if lg.is_zero:
                    parity = 0
                else:
                    lv = (-lg).divide_integral(deg)
                    parity = lv.parity()
                if sg * (-1 if parity else 1) == -1:
                    pe = True
                    break
        return (ps, pe, deg.val)
