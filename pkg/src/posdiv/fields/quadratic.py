"""Class groups, units and principality witnesses for quadratic fields.

The engine works with primitive integral ideals [a, (b+sqrt(D))/2] of the
maximal order of discriminant D, represented as (a, b) with b reduced mod
2a.  Reduction steps track the element multiplier, so a walk that lands on
the unit ideal certifies principality together with an exact generator.
For real fields the reduced ideals of a class form a cycle; its
lexicographically smallest (a, b) is the class fingerprint used to build
the group structure, and the continued fraction of the principal reduced
surd yields the fundamental unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..errors import PosdivError
from .elements import QuadElem


def is_fundamental_discriminant(d: int) -> bool:
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return _squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(abs(m))
    return False


def _squarefree(n: int) -> bool:
    if n % 4 == 0:
        return False
    f = 3
    while f * f * f * f <= n * n and f * f <= n:
        if n % (f * f) == 0:
            return False
        f += 2
    return True


def sqrt_mod_prime(n: int, p: int):
    """A square root of n mod p (odd prime), or None."""
    n %= p
    if n == 0:
        return 0
    if pow(n, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(n, (p + 1) // 4, p)
    # Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) == 1:
        z += 1
    m_, c, t, r = s, pow(z, q, p), pow(n, q, p), pow(n, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m_ - i - 1), p)
        m_, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


class QuadIdeal:
    """scalar * [a, (b+sqrt(D))/2]; scalar a positive rational."""

    __slots__ = ("D", "a", "b", "scalar")

    def __init__(self, D, a, b, scalar=Fraction(1)):
        assert a > 0
        b %= 2 * a
        assert (b * b - D) % (4 * a) == 0, "not an ideal of this discriminant"
        self.D = D
        self.a = a
        self.b = b
        self.scalar = Fraction(scalar)

    @staticmethod
    def unit_ideal(D):
        b = D % 2
        return QuadIdeal(D, 1, b)

    @property
    def c(self):
        return (self.b * self.b - self.D) // (4 * self.a)

    def conj(self):
        return QuadIdeal(self.D, self.a, -self.b, self.scalar)

    def norm(self) -> Fraction:
        return self.scalar * self.scalar * self.a

    def key(self):
        return (self.a, self.b)

    def __repr__(self):
        return f"QuadIdeal({self.scalar} * [{self.a}, ({self.b}+sqrt({self.D}))/2])"

    def __mul__(self, other):
        """Module product via 2-column integer HNF of the four generators."""
        assert self.D == other.D
        D = self.D
        a1, b1, a2, b2 = self.a, self.b, other.a, other.b
        gens = [
            (2 * a1 * a2, 0),
            (a1 * b2, a1),
            (a2 * b1, a2),
            ((b1 * b2 + D) // 2, (b1 + b2) // 2),
        ]
        # HNF on pairs (p, q): module = { (p + q sqrt(D))/2 }
        g = 0
        for _, q in gens:
            g = math.gcd(g, q)
        # combine rows to reach q = g, then clear the others
        cur = None
        rest = []
        for p, q in gens:
            if cur is None:
                cur = (p, q)
                continue
            p1, q1 = cur
            if q == 0:
                rest.append(p)
                continue
            if q1 == 0:
                rest.append(p1)
                cur = (p, q)
                continue
            gg, u, v = _xgcd(q1, q)
            # u*q1 + v*q = gg
            np_ = u * p1 + v * p
            rest.append((q // gg) * p1 - (q1 // gg) * p)
            cur = (np_, gg)
        p0, q0 = cur
        assert q0 == g and g > 0
        mnorm = 0
        for p in rest:
            mnorm = math.gcd(mnorm, p)
        # module = Z*(mnorm/2) + Z*((p0 + g sqrt(D))/2), with g | everything
        assert mnorm % (2 * g) == 0 or mnorm == 0
        a3 = mnorm // (2 * g)
        assert a3 > 0, "ideal product degenerated"
        b3 = (p0 // g) % (2 * a3)
        return QuadIdeal(D, a3, b3, self.scalar * other.scalar * g)

    def m_for_quad(self):
        return self.D if self.D % 4 == 1 else self.D // 4


def _xgcd(x, y):
    a0, a1, b0, b1 = 1, 0, 0, 1
    while y:
        q = x // y
        x, y = y, x - q * y
        a0, a1 = a1, a0 - q * a1
        b0, b1 = b1, b0 - q * b1
    if x < 0:
        x, a0, b0 = -x, -a0, -b0
    return x, a0, b0


def _beta_elem(m, D, b) -> QuadElem:
    """(b + sqrt(D))/2 as an element of Q(sqrt(m))."""
    if D % 4 == 1:
        return QuadElem(m, b, 1, 2)
    return QuadElem(m, b // 2, 1, 1)


class QuadEngine:
    """Reduction, principality and class-group structure for one field."""

    def __init__(self, d: int):
        if not is_fundamental_discriminant(d):
            raise PosdivError(f"{d} is not a fundamental discriminant")
        self.D = d
        self.m = d if d % 4 == 1 else d // 4
        self.real = d > 0
        self.sqrtD = math.isqrt(d) if d > 0 else None
        self._cycle_cache = {}

    # -- reduction ------------------------------------------------------

    def reduce_with_generator(self, ideal: QuadIdeal, stop_at_unit=False):
        """Walk to a reduced ideal: returns (reduced, gamma) with
        ideal = gamma * reduced.

        For real fields the walk continues around the cycle; with
        stop_at_unit it halts early if the unit ideal appears.
        """
        D, m = self.D, self.m
        gamma = QuadElem.from_rational(m, ideal.scalar)
        a, b = ideal.a, ideal.b
        if not self.real:
            while True:
                b = ((b + a - 1) % (2 * a)) - a + 1  # window (-a, a]
                c = (b * b - D) // (4 * a)
                if a < c or (a == c and b >= 0):
                    return QuadIdeal(D, a, b), gamma
                # rho step: [a, beta] = (beta/c) [c, -b+...], beta=(b+rtD)/2
                gamma = gamma * (_beta_elem(m, D, b) / QuadElem(m, c))
                a, b = c, -b
        steps = 0
        while True:
            a, b = self._normalize_real(a, b)
            if self._is_reduced_real(a, b):
                return QuadIdeal(D, a, b), gamma
            c = (b * b - D) // (4 * a)
            gamma = gamma * (_beta_elem(m, D, b) / QuadElem(m, c))
            a, b = abs(c), -b
            steps += 1
            if steps > 10000 + 4 * self.sqrtD:
                raise PosdivError("reduction did not terminate")

    def _normalize_real(self, a, b):
        s = self.sqrtD
        span = 2 * a
        # window (s - 2a, s] when a is small, else (-a, a]
        lo = s - span if a <= s else -a
        return a, lo + 1 + ((b - lo - 1) % span)

    def _is_reduced_real(self, a, b) -> bool:
        s = self.sqrtD
        # reduced <=> |sqrt(D) - 2a| < b < sqrt(D)
        return 0 < b <= s and 2 * a + b > s and 2 * a - b <= s

    def cycle(self, ideal: QuadIdeal):
        """All reduced (a, b mod 2a) in the class of `ideal` (a cycle for
        real fields, a singleton for imaginary ones)."""
        red, _ = self.reduce_with_generator(ideal)
        if not self.real:
            return [red.key()]
        D = self.D
        a, b = self._normalize_real(red.a, red.b)
        out = [(a, b % (2 * a))]
        guard = 0
        while True:
            c = (b * b - D) // (4 * a)
            a, b = self._normalize_real(abs(c), -b)
            k = (a, b % (2 * a))
            if k == out[0]:
                return out
            out.append(k)
            guard += 1
            if guard > 20000:
                raise PosdivError("cycle detection did not terminate")

    def class_key(self, ideal: QuadIdeal):
        red, _ = self.reduce_with_generator(ideal)
        if not self.real:
            return red.key()
        k0 = red.key()
        cached = self._cycle_cache.get(k0)
        if cached is not None:
            return cached
        cyc = self.cycle(red)
        key = min(cyc)
        for k in cyc:
            self._cycle_cache[k] = key
        return key

    def principal_generator(self, ideal: QuadIdeal):
        """Exact generator if `ideal` is principal, else None."""
        red, gamma = self.reduce_with_generator(ideal)
        if not self.real:
            return gamma if red.a == 1 else None
        D, m = self.D, self.m
        a, b = self._normalize_real(red.a, red.b)
        start = (a, b % (2 * a))
        g = QuadElem.one(m)
        guard = 0
        while True:
            if a == 1:
                return gamma * g
            c = (b * b - D) // (4 * a)
            g = g * (_beta_elem(m, D, b) / QuadElem(m, c))
            a, b = self._normalize_real(abs(c), -b)
            if (a, b % (2 * a)) == start:
                return None
            guard += 1
            if guard > 20000:
                raise PosdivError("principality walk did not terminate")

    # -- prime ideals ----------------------------------------------------

    def odd_prime_ideal(self, p: int):
        """A prime ideal above an odd p with (D|p) != -1, or None if inert."""
        D = self.D
        if p == 2:
            raise ValueError("use dyadic_prime_ideals for p = 2")
        r = sqrt_mod_prime(D, p)
        if r is None:
            return None
        # b must have the parity of D; r and p-r have opposite parities
        b = r if (r - D) % 2 == 0 else p - r
        assert (b * b - D) % (4 * p) == 0
        return QuadIdeal(D, p, b)

    def dyadic_prime_ideals(self):
        """The ideals above 2: [] for inert, one for ramified, two split."""
        D = self.D
        if D % 2 == 1:
            if D % 8 == 1:
                return [QuadIdeal(D, 2, 1), QuadIdeal(D, 2, 3)]
            return []  # inert: (2) stays prime
        m = self.m
        if m % 4 == 2:
            return [QuadIdeal(D, 2, 0)]
        return [QuadIdeal(D, 2, 2)]

    # -- units -----------------------------------------------------------

    def fundamental_unit(self) -> QuadElem:
        """Fundamental unit > 1 via the continued fraction of the reduced
        principal surd (b0 + sqrt(D))/2."""
        if not self.real:
            raise PosdivError("imaginary fields have no fundamental unit")
        D, s = self.D, self.sqrtD
        b0 = s if (s - D) % 2 == 0 else s - 1
        p_, q_ = b0, 2  # x = (P + sqrt(D))/Q
        m00, m01, m10, m11 = 1, 0, 0, 1
        start = (p_, q_)
        while True:
            a = (p_ + s) // q_
            m00, m01, m10, m11 = (
                m00 * a + m01,
                m00,
                m10 * a + m11,
                m10,
            )
            p_ = a * q_ - p_
            q_ = (D - p_ * p_) // q_
            if (p_, q_) == start:
                break
        x0 = _beta_elem(self.m, D, b0)
        eps = QuadElem(self.m, m10) * x0 + QuadElem(self.m, m11)
        assert abs(eps.norm()) == 1
        return eps

    def torsion_generator(self) -> QuadElem:
        """Generator of the root-of-unity group."""
        if self.D == -4:
            return QuadElem(self.m, 0, 1)  # i
        if self.D == -3:
            return QuadElem(self.m, 1, 1, 2)  # sixth root of unity
        return QuadElem(self.m, -1)

    def torsion_order(self) -> int:
        return {-4: 4, -3: 6}.get(self.D, 2)


# ---------------------------------------------------------------------------
# Class group structure
# ---------------------------------------------------------------------------


@dataclass
class ClassGroupData:
    """Multiplicative structure of Cl_F on adopted prime generators.

    ``relations`` is a triangular integer matrix: row i says
    gens[i]^relations[i][i] = prod_{j<i} gens[j]^(-relations[i][j]).
    ``dlog`` maps a class fingerprint to its exponent vector.
    """

    gens: list
    relations: list
    dlog: dict
    reps: dict
    invariants: list

    def order(self):
        n = 1
        for i in range(len(self.gens)):
            n *= self.relations[i][i]
        return n


def build_class_group(engine: QuadEngine, candidates) -> ClassGroupData:
    """Sequential order/discrete-log construction over candidate ideals."""
    unit = QuadIdeal.unit_ideal(engine.D)
    unit_key = engine.class_key(unit)
    dlog = {unit_key: ()}
    reps = {unit_key: unit}
    gens = []
    relations = []
    for cand in candidates:
        key = engine.class_key(cand)
        if key in dlog:
            continue
        # order of cand relative to the current subgroup
        power = cand
        j = 1
        while True:
            pk = engine.class_key(power)
            if pk in dlog:
                break
            power = power * cand
            power, _ = engine.reduce_with_generator(power)
            power = QuadIdeal(engine.D, power.a, power.b)  # drop scalar
            j += 1
            if j > 100000:
                raise PosdivError("class order search runaway")
        inside = dlog[pk]
        row = [-e for e in inside] + [j]
        # extend previous data to the new generator count
        gens.append(cand)
        relations = [r + [0] for r in relations]
        relations.append(row)
        new_dlog = {}
        new_reps = {}
        pw = QuadIdeal.unit_ideal(engine.D)
        for i in range(j):
            for k, vec in dlog.items():
                ideal2 = reps[k] * pw
                ideal2, _ = engine.reduce_with_generator(ideal2)
                ideal2 = QuadIdeal(engine.D, ideal2.a, ideal2.b)
                k2 = engine.class_key(ideal2)
                new_dlog[k2] = tuple(vec) + (i,)
                new_reps[k2] = ideal2
            pw = pw * cand
            pw, _ = engine.reduce_with_generator(pw)
            pw = QuadIdeal(engine.D, pw.a, pw.b)
        dlog = new_dlog
        reps = new_reps
    sq = [row[:] for row in relations]
    from ..zlinalg import smith_invariants_int

    invariants = smith_invariants_int(sq) if sq else []
    return ClassGroupData(gens, relations, dlog, reps, invariants)
