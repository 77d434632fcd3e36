"""Ingestion of externally computed field data ("posdiv-field/1").

The file carries everything the pipeline cannot derive for degree > 2:
defining polynomial, integral basis, signature, class-group generators
with orders and principality witnesses, 2-unit generators, dyadic local
factors, and isolating intervals for the real roots.  Loading re-verifies
every claim that can be checked from the data itself and rejects the file
with a named reason otherwise.

Restrictions of this format version (documented in the README): monic
defining polynomial, maximal order 2-adically generated by the root
(v2(disc f) = v2(disc F)), torsion {±1}, and class_group entries that
generate independent cyclic factors (the relation lattice is diagonal).
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

from ..errors import IngestionError, PosdivError
from ..twoadic import TwoAdic, iwasawa_log
from . import FieldData, PlaceRecord, TrackedElement, two_adic_mod
from .localring import LocalRing, resultant_int

SCHEMA_KEYS = {
    "format",
    "poly",
    "integral_basis",
    "signature",
    "disc",
    "class_group",
    "two_units",
    "torsion_order",
    "dyadic_places",
    "real_roots",
}


def _frac(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, float)):
        return Fraction(x)
    raise IngestionError("schema violation", f"bad rational {x!r}")


class PolyElem(tuple):
    """Element as a polynomial in the root, Fraction coefficients."""

    def __new__(cls, coeffs, n):
        c = [Fraction(x) for x in coeffs]
        c += [Fraction(0)] * (n - len(c))
        return super().__new__(cls, c[:n])


class IngestBackend:
    """Element operations driven by resultants and interval arithmetic."""

    def __init__(self, poly, real_intervals, prec_bits=96):
        self.poly = list(poly)  # ascending, monic, int
        self.n = len(poly) - 1
        self.real_intervals = [tuple(map(Fraction, iv)) for iv in real_intervals]
        self.prec_bits = prec_bits
        self._val_registry = {}

    # elements are PolyElem tuples
    def register_valuations(self, elem, vals):
        self._val_registry[elem] = dict(vals)

    def _clear_denominators(self, x: PolyElem):
        den = 1
        for c in x:
            den = den * c.denominator // math.gcd(den, c.denominator)
        return [int(c * den) for c in x], den

    def norm(self, x: PolyElem) -> Fraction:
        num, den = self._clear_denominators(x)
        r = resultant_int(self.poly, num) if any(num) else 0
        return Fraction(r, den**self.n)

    def local_norm(self, place, x: PolyElem, prec) -> TwoAdic:
        num, den = self._clear_denominators(x)
        g = [c % (1 << (prec + 16)) for c in place.local_ring.g]
        r = resultant_int(g, num)
        val = two_adic_mod(r, prec + 12)
        if den != 1:
            val = val / TwoAdic.from_int(den ** place.local_ring.deg, prec + 12)
        return val

    def valuation(self, place, x: PolyElem) -> int:
        if place.is_dyadic:
            n = self.local_norm(place, x, self.prec_bits)
            if n.is_zero:
                raise PosdivError("dyadic valuation exceeded precision")
            assert n.val % place.f == 0
            return n.val // place.f
        reg = self._val_registry.get(x)
        if reg is not None:
            return reg.get(place, 0)
        raise PosdivError(
            "odd-place valuations are only available for registered elements"
        )

    def real_sign(self, place, x: PolyElem) -> int:
        lo, hi = self.real_intervals[place.real_index]
        for _ in range(512):
            vlo, vhi = _interval_eval(x, lo, hi)
            if vlo > 0:
                return 1
            if vhi < 0:
                return -1
            mid = (lo + hi) / 2
            flo = _poly_eval(self.poly, lo)
            fmid = _poly_eval(self.poly, mid)
            if fmid == 0:
                mid = (lo + 2 * hi) / 3
                fmid = _poly_eval(self.poly, mid)
            if (flo < 0) != (fmid < 0):
                hi = mid
            else:
                lo = mid
        raise PosdivError("real sign did not resolve (element may be zero)")

    def element_support(self, x):
        raise PosdivError("element support not available for ingested fields")

    def random_element(self, rng):
        raise PosdivError("random elements not available for ingested fields")


def _poly_eval(coeffs, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _interval_eval(coeffs, lo, hi):
    """Naive interval evaluation of a polynomial on [lo, hi]."""
    vlo, vhi = Fraction(0), Fraction(0)
    plo, phi = Fraction(1), Fraction(1)
    for c in coeffs:
        c = Fraction(c)
        cand = [c * plo, c * phi]
        vlo += min(cand)
        vhi += max(cand)
        nxt = [plo * lo, plo * hi, phi * lo, phi * hi]
        plo, phi = min(nxt), max(nxt)
    return vlo, vhi


def _poly_disc(f):
    """Discriminant of a monic integer polynomial (ascending coeffs)."""
    n = len(f) - 1
    fp = [i * f[i] for i in range(1, n + 1)]
    r = resultant_int(f, fp)
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return sign * r


def _factor_degrees_mod2(g):
    """Degrees (with multiplicity) of the irreducible factors of g mod 2."""
    bits = 0
    for i, c in enumerate(g):
        if c % 2:
            bits |= 1 << i
    if bits == 0:
        raise IngestionError("local factor mismatch", "factor vanishes mod 2")

    def pdeg(b):
        return b.bit_length() - 1

    def pmod(a, b):
        while pdeg(a) >= pdeg(b) and a:
            a ^= b << (pdeg(a) - pdeg(b))
        return a

    def pmul(a, b):
        out = 0
        while b:
            if b & 1:
                out ^= a
            a <<= 1
            b >>= 1
        return out

    out = []
    # trial division by all irreducibles of degree up to deg/1
    irreducibles = []
    for d in range(1, pdeg(bits) + 1):
        for cand in range(1 << d, 1 << (d + 1)):
            if all(pmod(cand, p) for p in irreducibles if pdeg(p) <= d // 2 + 1):
                # cand irreducible iff no smaller irreducible divides it
                if all(pmod(cand, p) != 0 for p in irreducibles):
                    irreducibles.append(cand)
    for p in irreducibles:
        while pdeg(bits) >= pdeg(p) and pmod(bits, p) == 0:
            # exact division in F2[x]
            q = 0
            rem = bits
            while pdeg(rem) >= pdeg(p) and rem:
                sh = pdeg(rem) - pdeg(p)
                q ^= 1 << sh
                rem ^= p << sh
            if rem:
                break
            bits = q
            out.append(pdeg(p))
        if bits == 1:
            break
    return sorted(out)


def _elem_from_json(obj, basis_polys, n):
    if not isinstance(obj, dict) or set(obj) != {"num", "den"}:
        raise IngestionError("schema violation", f"bad element {obj!r}")
    num = obj["num"]
    den = int(obj["den"])
    if len(num) != n or den == 0:
        raise IngestionError("schema violation", "element vector length/denominator")
    coeffs = [Fraction(0)] * n
    for c, bp in zip(num, basis_polys):
        for i, b in enumerate(bp):
            coeffs[i] += Fraction(int(c)) * b
    return PolyElem([c / den for c in coeffs], n)


def load_field(path, prec_bits=96) -> FieldData:
    """Parse, verify and assemble a FieldData from a posdiv-field/1 file."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise IngestionError("schema violation", "top level must be an object")
    unknown = set(data) - SCHEMA_KEYS
    if unknown:
        raise IngestionError("schema violation", f"unknown keys {sorted(unknown)}")
    missing = SCHEMA_KEYS - set(data)
    if missing:
        raise IngestionError("schema violation", f"missing keys {sorted(missing)}")
    if data["format"] != "posdiv-field/1":
        raise IngestionError("schema violation", f"format {data['format']!r}")

    poly = [int(c) for c in data["poly"]]
    n = len(poly) - 1
    if n < 2 or poly[-1] != 1:
        raise IngestionError("schema violation", "polynomial must be monic, degree >= 2")
    if not _certify_irreducible(poly):
        raise IngestionError(
            "schema violation", "polynomial not certified irreducible"
        )
    r, c = (int(x) for x in data["signature"])
    if r + 2 * c != n:
        raise IngestionError("schema violation", "signature does not match degree")
    disc = int(data["disc"])
    disc_f = _poly_disc(poly)
    if disc == 0 or disc_f % disc:
        raise IngestionError("schema violation", "stated discriminant does not divide disc(poly)")
    index_sq = disc_f // disc
    if index_sq <= 0 or math.isqrt(index_sq) ** 2 != index_sq:
        raise IngestionError("schema violation", "disc(poly)/disc is not a square")
    if _v2(disc_f) != _v2(disc):
        raise IngestionError(
            "schema violation",
            "order not maximal at 2 (v2(disc poly) != v2(disc)): unsupported",
        )

    basis_polys = []
    for bp in data["integral_basis"]:
        basis_polys.append([_frac(x) for x in bp] + [Fraction(0)] * (n - len(bp)))
    if len(basis_polys) != n:
        raise IngestionError("schema violation", "integral basis size")
    det = _basis_det(basis_polys)
    if det == 0 or (1 / abs(det)) ** 2 != Fraction(index_sq):
        raise IngestionError(
            "schema violation", "integral basis determinant inconsistent with disc"
        )

    real_roots = data["real_roots"]
    if len(real_roots) != r:
        raise IngestionError("schema violation", "real root count != r")
    ivs = [tuple(map(_frac, iv)) for iv in real_roots]
    for lo, hi in ivs:
        if not (lo < hi) or _poly_eval(poly, lo) * _poly_eval(poly, hi) >= 0:
            raise IngestionError("schema violation", "real root interval not isolating")
    for (a1, b1), (a2, b2) in zip(ivs, ivs[1:]):
        if b1 >= a2:
            raise IngestionError("schema violation", "real root intervals overlap")

    torsion = int(data["torsion_order"])
    if torsion != 2:
        raise IngestionError(
            "schema violation", "only torsion {+-1} supported in this format"
        )

    backend = IngestBackend(poly, ivs, prec_bits)

    # --- dyadic places
    dyadic = []
    ef_sum = 0
    prod_check = [1]
    min_prec = None
    for k, dp in enumerate(data["dyadic_places"]):
        keys = set(dp)
        if not {"e", "f", "local_factor", "precision"} <= keys or not keys <= {
            "e",
            "f",
            "gens",
            "local_factor",
            "precision",
        }:
            raise IngestionError("schema violation", f"dyadic place keys {sorted(keys)}")
        e, f_ = int(dp["e"]), int(dp["f"])
        g = [int(x) for x in dp["local_factor"]]
        kprec = int(dp["precision"])
        min_prec = kprec if min_prec is None else min(min_prec, kprec)
        if len(g) - 1 != e * f_:
            raise IngestionError("local factor mismatch", "degree != e*f")
        shape = _factor_degrees_mod2(g)
        if shape != [f_] * e:
            raise IngestionError(
                "local factor mismatch",
                f"reduction mod 2 has factor degrees {shape}, expected {[f_] * e}",
            )
        uni = None
        if e > 1:
            gens = dp.get("gens")
            if not gens or len(gens) != 2:
                raise IngestionError(
                    "schema violation", "ramified place needs two-element gens"
                )
            uni_elem = _elem_from_json(gens[1], basis_polys, n)
            num, den = backend._clear_denominators(uni_elem)
            if den % 2 == 0:
                raise IngestionError("schema violation", "uniformizer not integral at 2")
            uni = num
        ring = LocalRing(g, e, f_, min(kprec, prec_bits), uniformizer=uni)
        if uni is not None and ring.valuation(uni) != 1:
            raise IngestionError("local factor mismatch", "gens[1] is not a uniformizer")
        dyadic.append(
            PlaceRecord(
                kind="finite",
                name=f"q{k}",
                p=2,
                e=e,
                f=f_,
                is_dyadic=True,
                completion="generic",
                local_ring=ring,
            )
        )
        ef_sum += e * f_
        mod = 1 << (kprec + 4)
        prod_check = [
            sum(prod_check[i] * g[j - i] for i in range(max(0, j - len(g) + 1), min(j + 1, len(prod_check)))) % mod
            for j in range(len(prod_check) + len(g) - 1)
        ]
    if ef_sum != n:
        raise IngestionError("local factor mismatch", "sum of e*f != degree")
    mod = 1 << (min_prec - 2)
    if [(a - b) % mod for a, b in zip(prod_check, poly)] != [0] * (n + 1):
        raise IngestionError(
            "local factor mismatch", "product of local factors != polynomial"
        )

    # --- factor-base odd primes from class_group
    fb_odd = []
    tracked = [TrackedElement(name="-1", element=PolyElem([-1], n), val_vector={}, is_torsion=True)]
    cl_orders = []
    witnesses = []
    for entry in data["class_group"]:
        keys = set(entry)
        if keys != {"p", "gens", "order", "witness"}:
            raise IngestionError("schema violation", f"class_group keys {sorted(keys)}")
        p = int(entry["p"])
        h = int(entry["order"])
        if p == 2 or p < 2 or h < 1:
            raise IngestionError("schema violation", "class_group prime/order invalid")
        w = _elem_from_json(entry["witness"], basis_polys, n)
        nw = backend.norm(w)
        odd_num = abs(nw.numerator) >> _v2(abs(nw.numerator))
        if nw.denominator != 1 and _v2(nw.denominator) != math.log2(nw.denominator):
            raise IngestionError("principality witness invalid", "denominator not a 2-power")
        fp_times_h = _plog(odd_num, p)
        if fp_times_h is None or fp_times_h % h:
            raise IngestionError(
                "principality witness invalid",
                f"norm odd part {odd_num} is not Np^{h}",
            )
        f_p = fp_times_h // h
        place = PlaceRecord(kind="finite", name=f"p{p}", p=p, e=1, f=f_p)
        fb_odd.append(place)
        cl_orders.append(h)
        witnesses.append((place, h, w))

    # --- two-units
    two_units = [_elem_from_json(u, basis_polys, n) for u in data["two_units"]]
    s = len(dyadic)
    if len(two_units) != r + c - 1 + s:
        raise IngestionError(
            "unit rank mismatch",
            f"{len(two_units)} generators, expected {r + c - 1 + s}",
        )
    dy_vecs = []
    for i, u in enumerate(two_units):
        nu = backend.norm(u)
        if nu == 0 or abs(nu.numerator) >> _v2(abs(nu.numerator)) != 1 or (
            nu.denominator >> _v2(nu.denominator)
        ) != 1:
            raise IngestionError("unit rank mismatch", f"generator {i} is not a 2-unit")
        vec = {}
        for q in dyadic:
            v = backend.valuation(q, u)
            if v:
                vec[q] = v
        dy_vecs.append(vec)
        tracked.append(TrackedElement(name=f"u{i}", element=u, val_vector=vec))
    mat = [[vec.get(q, 0) for q in dyadic] for vec in dy_vecs]
    if _int_rank(mat) != s:
        raise IngestionError("unit rank mismatch", "dyadic valuation vectors have deficient rank")

    for place, h, w in witnesses:
        vec = {place: h}
        for q in dyadic:
            v = backend.valuation(q, w)
            if v:
                vec[q] = v
        backend.register_valuations(w, vec)
        tracked.append(TrackedElement(name=f"w{place.name}", element=w, val_vector=vec))
    for t in tracked:
        backend.register_valuations(t.element, t.val_vector)

    cl_invariants = [x for x in sorted(cl_orders) if x > 1]
    cl_prime = sorted(o & -o for o in cl_orders if o & -o > 1)

    layer = _cyclotomic_layer_estimate(poly, dyadic, prec_bits)

    fd = FieldData(
        degree=n,
        signature=(r, c),
        disc=disc,
        dyadic_places=dyadic,
        real_places=[
            PlaceRecord(kind="real", name=f"oo{i}", real_index=i) for i in range(r)
        ],
        fb_odd=fb_odd,
        tracked=tracked,
        torsion_order=torsion,
        cl_invariants=cl_invariants,
        cl_prime_invariants=cl_prime,
        class_group_data=None,
        cyclotomic_layer=layer,
        label=str(path),
        backend=backend,
    )
    backend.field_data = fd
    return fd


def _v2(x):
    return (x & -x).bit_length() - 1 if x else 0


def _plog(x, p):
    k = 0
    while x % p == 0:
        x //= p
        k += 1
    return k if x == 1 else None


def _int_rank(m):
    rows = [r[:] for r in m if any(r)]
    rank = 0
    cols = len(m[0]) if m and m[0] else 0
    for col in range(cols):
        piv = next((r for r in rows if r[col]), None)
        if piv is None:
            continue
        rows.remove(piv)
        rank += 1
        nxt = []
        for rr in rows:
            if rr[col]:
                rr = [a * piv[col] - b * rr[col] for a, b in zip(rr, piv)]
            if any(rr):
                nxt.append(rr)
        rows = nxt
    return rank


def _certify_irreducible(poly):
    """Irreducibility certificate: f stays irreducible mod some small prime."""
    n = len(poly) - 1
    for p in (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47):
        if poly[-1] % p == 0:
            continue
        if _is_irreducible_mod_p(poly, p):
            return True
    return False


def _is_irreducible_mod_p(poly, p):
    n = len(poly) - 1
    f = [c % p for c in poly]

    def pmulmod(a, b):
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] = (out[i + j] + x * y) % p
        for i in range(len(out) - 1, n - 1, -1):
            cc = out[i]
            if cc:
                inv = pow(f[-1], -1, p)
                for j in range(n + 1):
                    out[i - n + j] = (out[i - n + j] - cc * inv * f[j]) % p
        return out[:n]

    def xpow(k):
        result = [1]
        base = [0, 1]
        while k:
            if k & 1:
                result = pmulmod(result, base)
            base = pmulmod(base, base)
            k >>= 1
        return result

    # f irreducible iff x^(p^n) = x mod f and gcd(x^(p^(n/q)) - x, f) = 1
    t = xpow(p**n)
    t = [(a - b) % p for a, b in zip(t + [0] * n, [0, 1] + [0] * n)][: n]
    if any(t):
        return False
    for q in set(_prime_factors(n)):
        t = xpow(p ** (n // q))
        t = [(a - b) % p for a, b in zip(t + [0] * n, [0, 1] + [0] * n)][: n]
        if not any(t):
            return False
        if _poly_gcd_deg(t, f, p) > 0:
            return False
    return True


def _prime_factors(n):
    out = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _poly_gcd_deg(a, b, p):
    a = [x % p for x in a]
    b = [x % p for x in b]

    def deg(u):
        for i in range(len(u) - 1, -1, -1):
            if u[i]:
                return i
        return -1

    while deg(b) >= 0:
        da, db = deg(a), deg(b)
        if da < db:
            a, b = b, a
            continue
        inv = pow(b[deg(b)], -1, p)
        factor = (a[da] * inv) % p
        shift = da - db
        for i in range(db + 1):
            a[i + shift] = (a[i + shift] - factor * b[i]) % p
    return deg(a)


def _basis_det(basis_polys):
    n = len(basis_polys)
    m = [[basis_polys[i][j] for j in range(n)] for i in range(n)]
    det = Fraction(1)
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col]), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for i in range(col + 1, n):
            if m[i][col]:
                fct = m[i][col] * inv
                m[i] = [a - fct * b for a, b in zip(m[i], m[col])]
    return det


def _cyclotomic_layer_estimate(poly, dyadic, prec):
    """v2 of the degree-lattice generator, minus 2, from a prime scan.

    Residue degrees above odd p come from the factor-degree pattern of the
    polynomial mod p; the minimum of v2(Log p^f) over a healthy sample of
    places together with the dyadic degrees pins the lattice.
    """
    best = None
    for q in dyadic:
        v = q.local_ring.degree_lattice_min(prec >> 1).val
        best = v if best is None else min(best, v)
    count = 0
    disc_f = _poly_disc(poly)
    for p in (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59):
        if count >= 12:
            break
        if disc_f % p:
            degs = _factor_degree_pattern(poly, p)
            for f_ in degs:
                lg = iwasawa_log(TwoAdic.from_int(p**f_, prec), prec >> 1)
                if not lg.is_zero:
                    best = min(best, lg.val)
            count += 1
    return max(best - 2, 0)


def _factor_degree_pattern(poly, p):
    """Degrees of the irreducible factors of poly mod p (squarefree case)."""
    n = len(poly) - 1
    f = [c % p for c in poly]
    degs = []
    remaining = f[:]

    def deg(u):
        for i in range(len(u) - 1, -1, -1):
            if u[i]:
                return i
        return -1

    d = 1
    while deg(remaining) > 0:
        if 2 * d > deg(remaining):
            degs.append(deg(remaining))
            break
        # gcd(x^(p^d) - x, remaining)
        t = _xpow_mod(remaining, p, p**d)
        t = [(a - b) % p for a, b in zip(t + [0] * n, [0, 1] + [0] * n)][: max(len(t), 2)]
        g = _poly_gcd(remaining, t, p)
        gd = deg(g)
        if gd > 0:
            degs.extend([d] * (gd // d))
            remaining = _poly_div(remaining, g, p)
        d += 1
    return degs


def _xpow_mod(f, p, k):
    n = len(f) - 1

    def pmulmod(a, b):
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] = (out[i + j] + x * y) % p
        for i in range(len(out) - 1, n - 1, -1):
            cc = out[i]
            if cc:
                inv = pow(f[n], -1, p)
                for j in range(n + 1):
                    out[i - n + j] = (out[i - n + j] - cc * inv * f[j]) % p
        return out[:n] if len(out) > n else out

    result = [1]
    base = [0, 1]
    while k:
        if k & 1:
            result = pmulmod(result, base)
        base = pmulmod(base, base)
        k >>= 1
    return result


def _poly_gcd(a, b, p):
    a = [x % p for x in a]
    b = [x % p for x in b]

    def deg(u):
        for i in range(len(u) - 1, -1, -1):
            if u[i]:
                return i
        return -1

    while deg(b) >= 0:
        da, db = deg(a), deg(b)
        if da < db:
            a, b = b, a
            continue
        inv = pow(b[db], -1, p)
        factor = (a[da] * inv) % p
        for i in range(db + 1):
            a[i + da - db] = (a[i + da - db] - factor * b[i]) % p
    return a


def _poly_div(a, b, p):
    def deg(u):
        for i in range(len(u) - 1, -1, -1):
            if u[i]:
                return i
        return -1

    a = [x % p for x in a]
    b = [x % p for x in b]
    q = [0] * (deg(a) - deg(b) + 1)
    inv = pow(b[deg(b)], -1, p)
    while deg(a) >= deg(b):
        da, db = deg(a), deg(b)
        f = (a[da] * inv) % p
        q[da - db] = f
        for i in range(db + 1):
            a[i + da - db] = (a[i + da - db] - f * b[i]) % p
    return q
