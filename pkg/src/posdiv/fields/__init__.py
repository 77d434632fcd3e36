"""Field data construction: quadratic engine plus ingestion of prepared data.

``FieldData`` is the immutable bundle the rest of the pipeline consumes:
places (dyadic, real, factor-base odd primes), a complete generating set of
the relevant S-units with their valuation vectors, torsion, and class-group
structure.  For quadratic fields everything is computed here from scratch;
higher-degree fields arrive through :mod:`posdiv.fields.ingest`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import PosdivError
from ..twoadic import TwoAdic
from ..zlinalg import smith_invariants_int
from .elements import QuadElem
from .quadratic import (
    QuadEngine,
    QuadIdeal,
    build_class_group,
    is_fundamental_discriminant,
)


def two_adic_mod(n: int, abs_bits: int) -> TwoAdic:
    """An integer known only modulo 2^abs_bits, as a TwoAdic."""
    n %= 1 << abs_bits
    if n == 0:
        return TwoAdic.zero(abs_bits)
    v = (n & -n).bit_length() - 1
    return TwoAdic(v, n >> v, abs_bits - v)


@dataclass(eq=False)
class PlaceRecord:
    """One place of the field.

    ``completion`` for dyadic places is a closed-form label of the local
    square class ("q2", "unram", "ram_pe2", "ram_sqrt2", "ram_neg2",
    "ram_i") for quadratic fields, or "generic" for ingested fields that
    carry a local ring instead.
    """

    kind: str  # "real" | "finite"
    name: str
    p: int = 0
    e: int = 1
    f: int = 1
    is_dyadic: bool = False
    ideal: object = None
    completion: str = ""
    local_gens: list = field(default_factory=list)
    embed_root: object = None  # 2-adic or p-adic root data for split places
    real_index: int = 0  # 0: sqrt(m) -> +sqrt(m)
    local_ring: object = None  # generic completions only

    @property
    def norm(self) -> int:
        return self.p**self.f

    def __repr__(self):
        return f"<place {self.name}>"


@dataclass(eq=False)
class TrackedElement:
    """A multiplicative generator everything else is written over."""

    name: str
    element: object
    val_vector: dict  # place -> ordinary valuation (finite support, FB only)
    is_torsion: bool = False


class FieldData:
    """Immutable description of a number field for the 2-adic pipeline."""

    def __init__(
        self,
        *,
        degree,
        signature,
        disc,
        dyadic_places,
        real_places,
        fb_odd,
        tracked,
        torsion_order,
        cl_invariants,
        cl_prime_invariants,
        class_group_data,
        cyclotomic_layer=0,
        label="",
        backend=None,
    ):
        self.degree = degree
        self.signature = signature
        self.disc = disc
        self.dyadic_places = list(dyadic_places)
        self.real_places = list(real_places)
        self.fb_odd = list(fb_odd)
        self.tracked = list(tracked)
        self.torsion_order = torsion_order
        self.cl_invariants = list(cl_invariants)
        self.cl_prime_invariants = list(cl_prime_invariants)
        self.class_group_data = class_group_data
        self.cyclotomic_layer = cyclotomic_layer  # a with [F cap Q^c : Q] = 2^a
        self.label = label
        self.backend = backend
        n_dyadic = sum(pl.e * pl.f for pl in self.dyadic_places)
        if n_dyadic != degree:
            raise PosdivError(
                f"dyadic ramification data sums to {n_dyadic}, degree is {degree}"
            )

    # -- structural views ------------------------------------------------

    @property
    def r(self):
        return self.signature[0]

    @property
    def c(self):
        return self.signature[1]

    @property
    def n_dyadic(self):
        return len(self.dyadic_places)

    def factor_base(self):
        return self.dyadic_places + self.fb_odd

    # -- element operations (delegated to the backend engine) -------------

    def local_norm(self, place, x, prec) -> TwoAdic:
        return self.backend.local_norm(place, x, prec)

    def valuation(self, place, x) -> int:
        return self.backend.valuation(place, x)

    def real_sign(self, place, x) -> int:
        return self.backend.real_sign(place, x)

    def real_signs(self, x):
        return [self.real_sign(pl, x) for pl in self.real_places]

    def norm(self, x) -> Fraction:
        return self.backend.norm(x)

    def element_support(self, x):
        return self.backend.element_support(x)

    def random_element(self, rng):
        return self.backend.random_element(rng)


# ---------------------------------------------------------------------------
# Quadratic backend
# ---------------------------------------------------------------------------


class QuadraticBackend:
    """Element operations for a quadratic field, exact throughout."""

    def __init__(self, engine: QuadEngine, prec_bits=96):
        self.engine = engine
        self.m = engine.m
        self.D = engine.D
        self.prec_bits = prec_bits
        self._omega_root = None  # Hensel root for the split-dyadic embedding
        self._odd_roots = {}

    # sqrt(m) image under the dyadic embedding chosen for place index 0
    def _sqrt_m_image(self, bits):
        root = self._hensel_omega_root(bits)
        return 2 * root - 1 if self.D % 4 == 1 else None

    def _hensel_omega_root(self, bits):
        """Root of x^2 - x + (1-m)/4 that is 0 mod 2 (m = 1 mod 8 only).

        Newton doubles the certified accuracy each step, so the working
        modulus must track the accuracy, not run ahead of it.
        """
        m = self.m
        c = (1 - m) // 4
        r = 0
        acc = 1  # f(0) = c is even
        target = bits + 4
        while acc < target:
            acc = min(2 * acc, target)
            mod = 1 << acc
            fr = (r * r - r + c) % mod
            r = (r - fr * pow(2 * r - 1, -1, mod)) % mod
        return r % (1 << target)

    def embed_dyadic(self, place, x: QuadElem, bits) -> TwoAdic:
        """Image of x in the completion at a split dyadic place, with at
        least ``bits`` certified unit bits (the valuation of the image can
        be large, e.g. for principality witnesses of high powers)."""
        extra = 16
        while True:
            s = self._sqrt_m_image(bits + extra)
            if place.embed_root == 1:
                s = -s
            num = x.a + x.b * s
            val = two_adic_mod(num, bits + extra)
            if not val.is_zero and val.prec >= bits:
                break
            if extra > 8 * (bits + 64):
                raise PosdivError(
                    "dyadic embedding valuation out of certified range"
                )
            extra *= 4
        if x.den != 1:
            val = val / TwoAdic.from_int(x.den, bits + extra)
        return val

    def local_norm(self, place, x: QuadElem, prec) -> TwoAdic:
        if not place.is_dyadic:
            raise PosdivError("local norms only materialized at dyadic places")
        if x.is_zero():
            raise PosdivError("local norm of zero")
        if place.completion == "q2":
            return self.embed_dyadic(place, x, prec)
        return TwoAdic.from_rational(x.norm(), 1, prec)

    def valuation(self, place, x: QuadElem) -> int:
        if x.is_zero():
            raise PosdivError("valuation of zero")
        if place.kind != "finite":
            raise PosdivError("valuation at an infinite place")
        p = place.p
        nx = x.norm()
        vnum = _val_int(nx.numerator, p)
        vden = _val_int(nx.denominator, p)
        if place.is_dyadic:
            if place.completion == "q2":
                img = self.embed_dyadic(place, x, self.prec_bits + 8)
                if img.is_zero:
                    raise PosdivError("precision exhausted in valuation")
                return img.val
            if place.e == 2:
                return vnum - vden
            return (vnum - vden) // place.f
        # odd places
        if place.e == 2:
            return vnum - vden
        if place.f == 2:
            assert (vnum - vden) % 2 == 0
            return (vnum - vden) // 2
        # split odd place: evaluate at the matched root of x^2 = D mod p^k
        return self._split_odd_valuation(place, x)

    def _split_odd_valuation(self, place, x: QuadElem) -> int:
        p = place.p
        den_v = _val_int(x.den, p)
        k = max(_val_int((x.a * x.a - self.m * x.b * x.b) or p, p) + 2 * den_v + 2, 4)
        t = self._odd_root(place, k)
        v = _val_int(x.a + x.b * t, p, cap=k)
        assert v < k, "valuation cap too small"
        return v - den_v

    def _odd_root(self, place, k):
        """sqrt(m) mod p^k matched to the place's ideal (sqrt(D) = -b)."""
        key = (place.p, place.embed_root, k)
        cached = self._odd_roots.get(key)
        if cached is not None:
            return cached
        p = place.p
        ideal = place.ideal
        # sqrt(D) = -b mod P; sqrt(m) = sqrt(D) * inv(2) if D = 4m
        r0 = (-ideal.b) % p
        if self.D % 4 == 0:
            r0 = (r0 * pow(2, -1, p)) % p
        r = r0
        mod = p
        while mod < p**k:
            mod = min(mod * mod, p**k)
            fr = (r * r - self.m) % mod
            r = (r - fr * pow(2 * r, -1, mod)) % mod
        self._odd_roots[key] = r
        return r

    def real_sign(self, place, x: QuadElem) -> int:
        return x.sign_at(place.real_index == 0)

    def norm(self, x: QuadElem) -> Fraction:
        return x.norm()

    def element_support(self, x: QuadElem):
        """All finite places with nonzero valuation, built on demand."""
        n = x.norm()
        primes = set(_factorize(abs(n.numerator)) + _factorize(n.denominator))
        out = []
        for p in sorted(primes):
            for pl in self._places_above(p):
                v = self.valuation(pl, x)
                if v:
                    out.append((pl, v))
        return out

    def _places_above(self, p):
        field_data = self.field_data
        if p == 2:
            return field_data.dyadic_places
        for pl in field_data.fb_odd:
            if pl.p == p:
                return [q for q in field_data.fb_odd if q.p == p]
        return make_odd_places(self, p)

    def random_element(self, rng):
        while True:
            a = rng.randrange(-40, 41)
            b = rng.randrange(-40, 41)
            den = rng.choice([1, 1, 1, 2, 3, 5])
            if a or b:
                return QuadElem(self.m, a, b, den)


def _val_int(n, p, cap=None):
    if n == 0:
        return cap if cap is not None else 0
    v = 0
    while n % p == 0:
        n //= p
        v += 1
        if cap is not None and v >= cap:
            return cap
    return v


def _factorize(n):
    out = []
    n = abs(n)
    for p in (2, 3, 5, 7):
        while n % p == 0:
            out.append(p)
            n //= p
    f = 11
    while f * f <= n:
        while n % f == 0:
            out.append(f)
            n //= f
        f += 2
    if n > 1:
        out.append(n)
    return out


def _primes_up_to(n):
    sieve = bytearray([1]) * 0 + bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = b"\x00" * len(sieve[i * i :: i])
    return [i for i in range(3, n + 1) if sieve[i]]


def completion_label(d: int) -> str:
    """Square class of the dyadic completion of Q(sqrt(m)), disc d."""
    if d % 2 == 1:
        return "q2" if d % 8 == 1 else "unram"
    m = d // 4
    if m % 4 == 3:
        return "ram_pe2" if m % 8 == 3 else "ram_i"
    half = (m // 2) % 8
    return {1: "ram_sqrt2", 7: "ram_neg2", 3: "ram_pe2", 5: "ram_pe2"}[half]


# closed-form classification facts per completion label
COMPLETION_FACTS = {
    # label: (in PS, in PE, v2(deg q))
    "q2": (True, True, 2),
    "unram": (True, True, 2),
    "ram_pe2": (True, True, 2),
    "ram_sqrt2": (True, True, 3),
    "ram_neg2": (True, False, 2),
    "ram_i": (False, False, 2),
}


def make_odd_places(backend, p):
    """Place records above an odd prime p (possibly outside the factor base)."""
    eng = backend.engine
    D = eng.D
    m = eng.m
    if D % p == 0:
        ideal = eng.odd_prime_ideal(p)
        return [PlaceRecord(kind="finite", name=f"p{p}", p=p, e=2, f=1, ideal=ideal)]
    ideal = eng.odd_prime_ideal(p)
    if ideal is None:
        return [PlaceRecord(kind="finite", name=f"p{p}", p=p, e=1, f=2, ideal=None)]
    conj = ideal.conj()
    return [
        PlaceRecord(
            kind="finite", name=f"p{p}.0", p=p, e=1, f=1, ideal=ideal, embed_root=0
        ),
        PlaceRecord(
            kind="finite", name=f"p{p}.1", p=p, e=1, f=1, ideal=conj, embed_root=1
        ),
    ]


def _dyadic_local_generators(m, label):
    """Topological generators of the completion's unit-ish part, as global
    elements: a uniformizer, -1, and 1 + r*pi^j sweeping the unit filtration."""
    if label == "q2":
        return [QuadElem(m, 2), QuadElem(m, -1), QuadElem(m, 3), QuadElem(m, 5)]
    if label == "unram":
        omega = QuadElem(m, 1, 1, 2)  # (1+sqrt(m))/2, integral for m = 5 mod 8
        gens = [QuadElem(m, 2), QuadElem(m, -1)]
        for j in (1, 2):
            for r in (QuadElem(m, 1), omega):
                gens.append(QuadElem(m, 1) + r * QuadElem(m, 1 << j))
        return gens
    # ramified: pi = sqrt(m) or 1 + sqrt(m)
    pi = QuadElem(m, 0, 1) if m % 2 == 0 else QuadElem(m, 1, 1)
    gens = [pi, QuadElem(m, -1)]
    pj = QuadElem.one(m)
    for _ in range(4):
        pj = pj * pi
        gens.append(QuadElem.one(m) + pj)
    return gens


def quadratic_field(d: int, prec_bits=96) -> FieldData:
    """Build FieldData for the quadratic field of fundamental discriminant d."""
    if not is_fundamental_discriminant(d):
        raise PosdivError(f"{d} is not a fundamental discriminant")
    engine = QuadEngine(d)
    m = engine.m
    backend = QuadraticBackend(engine, prec_bits)
    r, c = (2, 0) if d > 0 else (0, 1)

    # --- dyadic places
    label = completion_label(d)
    dyadic = []
    if label == "q2":
        for idx, ideal in enumerate(engine.dyadic_prime_ideals()):
            dyadic.append(
                PlaceRecord(
                    kind="finite",
                    name=f"q{idx}",
                    p=2,
                    e=1,
                    f=1,
                    is_dyadic=True,
                    ideal=ideal,
                    completion="q2",
                    local_gens=_dyadic_local_generators(m, "q2"),
                    embed_root=idx,
                )
            )
    elif label == "unram":
        dyadic.append(
            PlaceRecord(
                kind="finite",
                name="q0",
                p=2,
                e=1,
                f=2,
                is_dyadic=True,
                ideal=None,
                completion=label,
                local_gens=_dyadic_local_generators(m, label),
            )
        )
    else:
        ideal = engine.dyadic_prime_ideals()[0]
        dyadic.append(
            PlaceRecord(
                kind="finite",
                name="q0",
                p=2,
                e=2,
                f=1,
                is_dyadic=True,
                ideal=ideal,
                completion=label,
                local_gens=_dyadic_local_generators(m, label),
            )
        )

    real_places = []
    if d > 0:
        real_places = [
            PlaceRecord(kind="real", name="oo0", real_index=0),
            PlaceRecord(kind="real", name="oo1", real_index=1),
        ]

    # --- class group from prime forms up to the Minkowski bound
    if d < 0:
        bound = int(math.isqrt(abs(d)) * 2 / math.pi) + 2
    else:
        bound = math.isqrt(d) // 2 + 2
    candidates = []
    for p in _primes_up_to(max(bound, 20)):
        ideal = engine.odd_prime_ideal(p)
        if ideal is not None:
            candidates.append(ideal)
    cg = build_class_group(engine, candidates)
    cl_invariants = cg.invariants

    # cross-check the imaginary class number by counting reduced forms
    if d < 0:
        h = _count_reduced_forms(d)
        if h != cg.order():
            raise PosdivError(
                f"class group order {cg.order()} disagrees with form count {h}"
            )

    # --- class data of the dyadic primes
    dl_rows = list(cg.relations)
    n_gens = len(cg.gens)
    dyadic_dlogs = []
    for pl in dyadic:
        if pl.ideal is None:
            dyadic_dlogs.append([0] * n_gens)
        else:
            dyadic_dlogs.append(list(cg.dlog[engine.class_key(pl.ideal)]))

    def two_part(invs):
        out = []
        for x in invs:
            t = x & -x
            if t > 1:
                out.append(t)
        return sorted(out)

    cl_prime_invariants = two_part(
        smith_invariants_int(dl_rows + dyadic_dlogs) if n_gens else []
    )

    # --- factor-base odd primes: generate the 2-part of Cl' and provide
    # low-valuation degrees for primitive-divisor choices
    fb_odd = []
    fb_dlogs = []
    chosen_ps = set()

    def gap_closed():
        rows = dl_rows + dyadic_dlogs + fb_dlogs
        if not n_gens:
            return True
        return not two_part(smith_invariants_int(rows))

    available = _primes_up_to(max(bound * 2, 200))

    def adopt(p):
        chosen_ps.add(p)
        ideal = engine.odd_prime_ideal(p)
        fb_dlogs.append(list(cg.dlog[engine.class_key(ideal)]))
        fb_odd.extend(make_odd_places(backend, p))

    for p in available:
        if gap_closed():
            break
        if p in chosen_ps:
            continue
        ideal = engine.odd_prime_ideal(p)
        if ideal is None:
            continue
        vec = cg.dlog[engine.class_key(ideal)]
        # only helpful if it enlarges the generated subgroup
        trial = fb_dlogs + [list(vec)]
        if two_part(smith_invariants_int(dl_rows + dyadic_dlogs + trial)) == two_part(
            smith_invariants_int(dl_rows + dyadic_dlogs + fb_dlogs)
        ):
            continue
        adopt(p)
    if not gap_closed():
        raise PosdivError("factor base failed to generate the 2-class group")

    # low-valuation degree insurance: two odd primes with p = 3,5 mod 8
    added = sum(1 for p in chosen_ps if p % 8 in (3, 5))
    for p in available:
        if added >= 2:
            break
        if p % 8 not in (3, 5) or p in chosen_ps:
            continue
        if engine.odd_prime_ideal(p) is None:
            continue
        adopt(p)
        added += 1

    # --- relation lattice of the factor-base classes, with witnesses.
    # Dyadic places are processed first, so the triangular basis starts
    # with rows supported only at dyadic places: exactly the 2-unit
    # principalizers the unit machinery needs to see separately.  All
    # entries stay bounded by class orders.
    fb_places = dyadic + fb_odd
    lattice = _fb_relation_lattice(engine, fb_places)

    tracked = []
    tor = engine.torsion_generator()
    tracked.append(
        TrackedElement(name="-1", element=QuadElem(m, -1), val_vector={}, is_torsion=True)
    )
    if engine.torsion_order() > 2:
        tracked.append(
            TrackedElement(name="zeta", element=tor, val_vector={}, is_torsion=True)
        )
    if d > 0:
        eps = engine.fundamental_unit()
        tracked.append(TrackedElement(name="eps0", element=eps, val_vector={}))

    for k, vec in enumerate(lattice):
        witness = _witness_for_vector(engine, fb_places, vec)
        val_vector = {pl: v for pl, v in zip(fb_places, vec) if v}
        _verify_witness(backend, fb_places, vec, witness)
        tracked.append(
            TrackedElement(name=f"w{k}", element=witness, val_vector=val_vector)
        )

    fd = FieldData(
        degree=2,
        signature=(r, c),
        disc=d,
        dyadic_places=dyadic,
        real_places=real_places,
        fb_odd=fb_odd,
        tracked=tracked,
        torsion_order=engine.torsion_order(),
        cl_invariants=cl_invariants,
        cl_prime_invariants=cl_prime_invariants,
        class_group_data=cg,
        cyclotomic_layer=1 if d == 8 else 0,
        label=f"disc {d}",
        backend=backend,
    )
    backend.field_data = fd
    _check_sunit_rank(fd)
    return fd


def _count_reduced_forms(d):
    h = 0
    bound = math.isqrt(abs(d) // 3)
    for a in range(1, bound + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - d) % (4 * a):
                continue
            cc = (b * b - d) // (4 * a)
            if a < cc or (a == cc and b >= 0):
                h += 1
    return h


def _fb_relation_lattice(engine, fb_places):
    """Triangular basis of {v : prod P_i^v_i principal}, entries bounded by
    class orders; row i has its diagonal at place i."""
    unit = QuadIdeal.unit_ideal(engine.D)
    dlog = {engine.class_key(unit): ()}
    reps = {engine.class_key(unit): unit}
    rows = []
    n = len(fb_places)
    for i, pl in enumerate(fb_places):
        if pl.ideal is None:
            row = [0] * n
            row[i] = 1
            rows.append(row)
            continue
        cls = QuadIdeal(engine.D, pl.ideal.a, pl.ideal.b)
        power = cls
        k = 1
        while True:
            key = engine.class_key(power)
            if key in dlog:
                break
            power = power * cls
            power, _ = engine.reduce_with_generator(power)
            power = QuadIdeal(engine.D, power.a, power.b)
            k += 1
            if k > 10**6:
                raise PosdivError("class order runaway in factor-base lattice")
        inside = dlog[key]
        row = [-e for e in inside] + [0] * (i - len(inside)) + [k] + [0] * (n - i - 1)
        rows.append(row)
        new_dlog, new_reps = {}, {}
        pw = QuadIdeal.unit_ideal(engine.D)
        for j in range(k):
            for kk, vec in dlog.items():
                ideal2 = reps[kk] * pw
                ideal2, _ = engine.reduce_with_generator(ideal2)
                ideal2 = QuadIdeal(engine.D, ideal2.a, ideal2.b)
                k2 = engine.class_key(ideal2)
                new_dlog[k2] = tuple(vec) + (0,) * (i - len(vec)) + (j,)
                new_reps[k2] = ideal2
            pw = pw * cls
            pw, _ = engine.reduce_with_generator(pw)
            pw = QuadIdeal(engine.D, pw.a, pw.b)
        dlog, reps = new_dlog, new_reps
    return rows


def _mul_reduced(engine, acc, acc_g, ideal, ideal_g):
    """(acc * ideal) reduced, with the generator multiplier carried along."""
    prod = acc * ideal
    red, g = engine.reduce_with_generator(prod)
    return QuadIdeal(engine.D, red.a, red.b), acc_g * ideal_g * g


def _ideal_power_reduced(engine, base, k):
    """base^k = gamma * reduced, by square-and-reduce."""
    m = engine.m
    res = QuadIdeal.unit_ideal(engine.D)
    res_g = QuadElem.one(m)
    sq, sq_g = engine.reduce_with_generator(base)
    sq = QuadIdeal(engine.D, sq.a, sq.b)
    while k:
        if k & 1:
            res, res_g = _mul_reduced(engine, res, res_g, sq, sq_g)
        k >>= 1
        if k:
            sq, sq_g = _mul_reduced(engine, sq, sq_g * sq_g, sq, QuadElem.one(m))
    return res, res_g


def _witness_for_vector(engine, fb_places, vec) -> QuadElem:
    """Generator of prod P^v over the factor base (principal by construction).

    Negative powers go through the conjugate ideal and a rational norm
    correction; everything is reduced along the way with the generator
    multipliers accumulated exactly.
    """
    m = engine.m
    scal = Fraction(1)
    acc = QuadIdeal.unit_ideal(engine.D)
    gamma = QuadElem.one(m)
    for pl, v in zip(fb_places, vec):
        if v == 0:
            continue
        if pl.ideal is None:
            # inert dyadic place: the ideal is (2)
            scal *= Fraction(2) ** v
            continue
        base = pl.ideal if v > 0 else pl.ideal.conj()
        if v < 0:
            scal /= Fraction(int(pl.ideal.norm())) ** (-v)
        red, g = _ideal_power_reduced(engine, base, abs(v))
        acc, gamma = _mul_reduced(engine, acc, gamma, red, g)
    gen = engine.principal_generator(acc)
    if gen is None:
        raise PosdivError("relation vector is not principal: class data bug")
    return gen * gamma * QuadElem.from_rational(m, scal)


def _verify_witness(backend, fb_places, vec, witness):
    for pl, v in zip(fb_places, vec):
        got = backend.valuation(pl, witness)
        if got != v:
            raise PosdivError(
                f"witness valuation mismatch at {pl.name}: {got} != {v}"
            )
    # norm consistency: |N| = prod Np^v
    expect = Fraction(1)
    for pl, v in zip(fb_places, vec):
        expect *= Fraction(pl.norm) ** v
    if abs(backend.norm(witness)) != expect:
        raise PosdivError("witness norm inconsistent with its valuation vector")


def _check_sunit_rank(fd: FieldData):
    r, c = fd.signature
    s = len(fd.dyadic_places)
    t = len(fd.fb_odd)
    free = [g for g in fd.tracked if not g.is_torsion]
    expect = (r + c - 1) + s + t
    if len(free) != expect:
        raise PosdivError(
            f"S-unit generator count {len(free)} != expected {expect}"
        )
