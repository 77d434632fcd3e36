"""Positive divisor classes and the 2-rank of the wild kernel.

The group is presented on the degree-zero class generators, one generator
carrying the degree direction (a primitive divisor), and the sign-space
generators.  Relations come in four batches: orders of the class
generators, one relation per exceptional place, the sign vectors of the
exceptional units (the realizing elements are only determined up to
those), and exponent-2 rows for the sign coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GrossAlarm, PosdivError, UnsupportedCaseError
from .logarithmic import (
    PRECISION_SLACK,
    Divisor,
    coeff_parity,
    coeff_residue,
    log_valuation,
)
from .signatures import (
    SignVector,
    positive_sign_check,
    sign_vector,
    sign_vector_of_exponents,
)
from .twoadic import TwoAdic
from .zlinalg import (
    AbelianGroupType,
    GroupPresentation,
    nullspace_mod,
    solve_mod,
)


# ---------------------------------------------------------------------------
# Exceptional and positive units
# ---------------------------------------------------------------------------


@dataclass
class ExcUnitBasis:
    """Generators of the exceptional units as exponent vectors over
    field.tracked, with their sign vectors."""

    field: object
    free_vectors: list  # exponent vectors (tracked coordinates)
    free_signs: list  # SignVector per free generator
    torsion_indices: list  # tracked indices of torsion generators
    torsion_signs: list
    pe_logvals: list  # per free generator: dict place -> v~ value

    @property
    def free_rank(self):
        return len(self.free_vectors)

    def all_sign_rows(self):
        return list(self.torsion_signs) + list(self.free_signs)

    def all_vectors(self):
        out = []
        n = len(self.field.tracked)
        for idx in self.torsion_indices:
            v = [0] * n
            v[idx] = 1
            out.append(v)
        out.extend(self.free_vectors)
        return out


def exceptional_units(field_data, log_group, classification, prec, tracked_signs):
    """Kernel of the logarithmic valuations at dyadic places outside the
    exceptional set, inside the 2-units."""
    if classification.e == 0:
        raise UnsupportedCaseError("no exceptional places")
    tracked = field_data.tracked
    two_unit_idx = [
        i
        for i, t in enumerate(tracked)
        if not t.is_torsion and all(pl.is_dyadic for pl in t.val_vector)
    ]
    r, c = field_data.signature
    s = len(field_data.dyadic_places)
    if len(two_unit_idx) != r + c - 1 + s:
        raise PosdivError(
            f"2-unit generator count {len(two_unit_idx)} != {r + c - 1 + s}"
        )
    non_pe = [q for q in field_data.dyadic_places if q not in classification.pe]
    if non_pe:
        rows = []
        for q in non_pe:
            row = []
            for i in two_unit_idx:
                lv = log_group.tracked_logvals[i].get(q, 0)
                row.append(coeff_residue(lv, prec))
            rows.append(row)
        kernel = nullspace_mod(rows, prec)
        combos = []
        for vec in kernel:
            lead = next((x for x in vec if x), None)
            if lead is None:
                continue
            lead_val = (lead & -lead).bit_length() - 1
            if lead_val == 0:
                combos.append(vec)
            elif lead_val < prec - PRECISION_SLACK:
                raise GrossAlarm(
                    "exceptional-unit kernel has a non-saturated direction"
                )
        e_count = classification.e
    else:
        combos = [
            [1 if j == k else 0 for j in range(len(two_unit_idx))]
            for k in range(len(two_unit_idx))
        ]
        e_count = s
    expected = r + c - 1 + classification.e
    if len(combos) != expected:
        raise GrossAlarm(
            f"exceptional unit rank {len(combos)} != {expected}: "
            "finiteness assumption violated or precision too low"
        )
    n = len(tracked)
    free_vectors = []
    for combo in combos:
        vec = [0] * n
        for coef, idx in zip(combo, two_unit_idx):
            vec[idx] = coef
        free_vectors.append(vec)
    free_signs = [sign_vector_of_exponents(tracked_signs, v) for v in free_vectors]
    torsion_indices = [i for i, t in enumerate(tracked) if t.is_torsion]
    torsion_signs = [tracked_signs[i] for i in torsion_indices]
    pe_logvals = []
    for vec in free_vectors:
        vals = {}
        for q in classification.pe:
            total = TwoAdic.zero()
            for i, e in enumerate(vec):
                if e:
                    lv = log_group.tracked_logvals[i].get(q, 0)
                    lv = lv if isinstance(lv, TwoAdic) else TwoAdic.from_int(lv, prec)
                    total = total + lv * TwoAdic.from_int(e, prec)
            vals[q] = total
        pe_logvals.append(vals)
    # membership: vanishing logarithmic valuation off the exceptional set
    for vec in free_vectors:
        for q in non_pe:
            total = TwoAdic.zero()
            for i, e in enumerate(vec):
                if e:
                    lv = log_group.tracked_logvals[i].get(q, 0)
                    lv = lv if isinstance(lv, TwoAdic) else TwoAdic.from_int(lv, prec)
                    total = total + lv * TwoAdic.from_int(e, prec)
            if not total.same(TwoAdic.zero(), bits=prec - PRECISION_SLACK):
                raise PosdivError("exceptional unit fails its defining property")
    return ExcUnitBasis(
        field=field_data,
        free_vectors=free_vectors,
        free_signs=free_signs,
        torsion_indices=torsion_indices,
        torsion_signs=torsion_signs,
        pe_logvals=pe_logvals,
    )


def _gf2_row_reduce(rows):
    """Returns (rank, kernel basis) of a 0/1 matrix over GF(2)."""
    if not rows:
        return 0, []
    m = len(rows[0])
    aug = []
    for i, r in enumerate(rows):
        bits = 0
        for j, x in enumerate(r):
            if x & 1:
                bits |= 1 << j
        tag = 1 << i
        aug.append((bits, tag))
    basis = {}
    kernel = []
    for bits, tag in aug:
        cur, curtag = bits, tag
        while cur:
            lead = cur.bit_length() - 1
            if lead in basis:
                b, bt = basis[lead]
                cur ^= b
                curtag ^= bt
            else:
                basis[lead] = (cur, curtag)
                cur = 0
                curtag = 0
        if curtag:
            kernel.append([1 if curtag >> i & 1 else 0 for i in range(len(rows))])
    return len(basis), kernel


def positive_units(exc: ExcUnitBasis, classification):
    """Kernel of the sign map on the exceptional units; returns
    (basis exponent vectors, index as a power of 2)."""
    rows = []
    for sv in exc.all_sign_rows():
        rows.append([1 if x == -1 else 0 for x in sv])
    rank, kernel = _gf2_row_reduce(rows)
    vectors = exc.all_vectors()
    n = len(exc.field.tracked)
    basis = []
    for combo in kernel:
        vec = [0] * n
        for c, v in zip(combo, vectors):
            if c:
                for j in range(n):
                    vec[j] += v[j]
        basis.append(vec)
    # generators of square index stay generators of the kernel subgroup:
    # add 2 * (each exceptional generator) to keep the rank full
    for v in vectors:
        basis.append([2 * x for x in v])
    return basis, 1 << rank


# ---------------------------------------------------------------------------
# The positive divisor class group
# ---------------------------------------------------------------------------


@dataclass
class PositiveClassGroup:
    field: object
    log_group: object
    classification: object
    prec: int
    orders: list  # invariant factors (ascending)
    rep_divisors: list  # divisor part of each canonical representative
    rep_signs: list  # SignVector part
    rep_degrees: list  # TwoAdic degree of the divisor part
    presentation: GroupPresentation
    e_vectors: list
    e_base: SignVector
    index_of_positive_units: int = 0

    def type(self):
        return AbelianGroupType(self.orders)

    @property
    def rank(self):
        return len(self.orders)


def _first_coord_sign(classification, divisor) -> int:
    """sg(a, 1): the parity product making (a, e_a) positive."""
    total = 1
    for pl, c in divisor.support.items():
        if classification.in_ps_minus_pls(pl) and coeff_parity(c):
            total = -total
    return total


def _unit_vector_sign(classification, divisor) -> SignVector:
    first = _first_coord_sign(classification, divisor)
    return SignVector(tuple([first] + [1] * (classification.m - 1)))


def compute_cl_pos(field_data, log_group, classification, exc, prec, tracked_signs):
    """Assemble the relation matrix of the positive divisor class group."""
    if classification.e == 0:
        raise UnsupportedCaseError(
            "positive classes are infinite without exceptional places"
        )
    C = classification
    G = log_group
    nu = G.rank
    m = C.m
    b_place = G.base_place
    deg_b = G.degrees[b_place]
    mod = 1 << prec

    e_vectors = [_unit_vector_sign(C, G.generators[j]) for j in range(nu)]
    b_div = Divisor({b_place: 1})
    e_base = _unit_vector_sign(C, b_div)

    n_cols = nu + 1 + (m - 1)
    rows = []

    def sign_bits(w: SignVector):
        assert w.product() == 1, "sign relation escaped the even-weight space"
        return [1 if w[k] == -1 else 0 for k in range(1, m)]

    def assemble(a_coeffs, lam, w):
        return (
            [coeff_residue(c, prec) for c in a_coeffs]
            + [coeff_residue(lam, prec)]
            + sign_bits(w)
        )

    # order relations of the degree-zero class generators
    for j in range(nu):
        alpha = G.order_elements[j]
        w = sign_vector_of_exponents(tracked_signs, alpha)
        # e_j enters with an even exponent, hence trivially
        a_coeffs = [0] * nu
        a_coeffs[j] = G.orders[j]
        rows.append(assemble(a_coeffs, 0, w))

    # one relation per exceptional place
    for p_i in C.pe:
        if p_i is b_place:
            lam = 1
            coeffs = [0] * nu
            w = e_base
        else:
            ratio = G.ratios[p_i]
            d = Divisor({p_i: 1})
            d.add(b_place, -ratio)
            coeffs, alpha0 = G.decompose(d)
            alpha = [(-coeff_residue(x, prec)) % mod for x in alpha0]
            w = sign_vector_of_exponents(tracked_signs, alpha)
            for j in range(nu):
                w = w * e_vectors[j].power(coeffs[j])
            w = w * e_base.power(ratio)
            lam = ratio
        rows.append(assemble(coeffs, lam, w))

    # exceptional unit sign relations (torsion included)
    for w in exc.all_sign_rows():
        rows.append(assemble([0] * nu, 0, w))

    # the sign space has exponent 2
    for k in range(m - 1):
        row = [0] * (nu + 1) + [2 if i == k else 0 for i in range(m - 1)]
        rows.append(row)

    pres = GroupPresentation(n_cols, rows, prec, slack=PRECISION_SLACK)
    if pres.unbounded:
        raise GrossAlarm("positive class group not finite at this precision")

    orders = []
    rep_divisors = []
    rep_signs = []
    rep_degrees = []
    for i, o in enumerate(pres.orders):
        if not (1 < o < (1 << (prec - PRECISION_SLACK))):
            continue
        expr = pres.gen_expr[i]
        div = Divisor()
        for j in range(nu):
            if expr[j]:
                div = div.plus(G.generators[j].scaled(expr[j]))
        lam_c = expr[nu]
        if lam_c:
            div.add(b_place, lam_c)
        sv = SignVector.ones(m)
        for j in range(nu):
            sv = sv * e_vectors[j].power(expr[j])
        sv = sv * e_base.power(lam_c)
        for k in range(m - 1):
            if expr[nu + 1 + k] % 2:
                g = [1] * m
                g[0] = -1
                g[k + 1] = -1
                sv = sv * SignVector(tuple(g))
        deg = TwoAdic.from_int(lam_c, prec) * deg_b if lam_c else TwoAdic.zero(prec + deg_b.val)
        orders.append(o)
        rep_divisors.append(div)
        rep_signs.append(sv)
        rep_degrees.append(deg)
        if positive_sign_check(C, div, sv) != 1:
            raise PosdivError("representative fails the positivity test")

    return PositiveClassGroup(
        field=field_data,
        log_group=G,
        classification=C,
        prec=prec,
        orders=orders,
        rep_divisors=rep_divisors,
        rep_signs=rep_signs,
        rep_degrees=rep_degrees,
        presentation=pres,
        e_vectors=e_vectors,
        e_base=e_base,
    )


# ---------------------------------------------------------------------------
# Degree-zero subgroup of the positive classes
# ---------------------------------------------------------------------------


def compute_cl_pos_deg0(clpos: PositiveClassGroup, prec):
    """Both routes to the degree-zero part: the transcribed relation-matrix
    algorithm and a direct kernel-of-the-degree-map computation.

    Returns (matrix_route_type, kernel_route_type, agree_flag).
    """
    C = clpos.classification
    G = clpos.log_group
    w = len(clpos.orders)
    if w == 0:
        t = AbelianGroupType([])
        return t, t, True
    deg_pe = G.degrees[C.pe[0]]
    vstar = deg_pe.val

    # order representatives by increasing degree valuation
    def dval(d):
        return d.val if not d.is_zero else prec + 64

    order = sorted(range(w), key=lambda i: (dval(clpos.rep_degrees[i]),))
    degs = [clpos.rep_degrees[i] for i in order]
    ords = [clpos.orders[i] for i in order]

    # transcribed route
    d1 = degs[0]
    if d1.is_zero or d1.val >= prec - PRECISION_SLACK:
        t_exp = 0
        ratios = [0] * (w - 1)
    else:
        t_exp = max(vstar - d1.val, 0)
        ratios = []
        for i in range(1, w):
            if degs[i].is_zero:
                ratios.append(0)
            else:
                ratios.append(degs[i].divide_integral(d1).residue(prec))
    first = [1 << t_exp] + [(-r) % (1 << prec) for r in ratios]
    first += [ords[0]] + [0] * (w - 1)
    a2 = [first]
    for i in range(1, w):
        row = [0] * (2 * w)
        row[i] = 1
        row[w + i] = ords[i]
        a2.append(row)
    kernel = nullspace_mod(a2, prec)
    rel_rows = [vec[:w] for vec in kernel]
    pres = GroupPresentation(w, rel_rows, prec, slack=PRECISION_SLACK)
    matrix_type = pres.type(alarm=True)

    # direct kernel of the degree map: S = {x : sum x_i deg(b_i) = 0 mod
    # deg of the exceptional sublattice}, then S / (order_i * e_i)
    if vstar > 0:
        d_res = [coeff_residue(x, vstar) if not x.is_zero else 0 for x in degs]
        sol = nullspace_mod([d_res], vstar)
        basis = [list(v) for v in sol]
        for i in range(w):
            basis.append([(1 << vstar) if i == j else 0 for j in range(w)])
    else:
        basis = [[1 if i == j else 0 for j in range(w)] for i in range(w)]
    # relations among the images of the basis in S / Lambda, where Lambda is
    # the per-coordinate order lattice: scale coordinate i by 2^(prec - m_i)
    cond = []
    for i in range(w):
        shift = prec - (ords[i].bit_length() - 1)
        cond.append([(b[i] << shift) % (1 << prec) for b in basis])
    rel = nullspace_mod(cond, prec)
    pres2 = GroupPresentation(len(basis), rel, prec, slack=PRECISION_SLACK)
    kernel_type = pres2.type(alarm=True)

    return matrix_type, kernel_type, matrix_type == kernel_type


# ---------------------------------------------------------------------------
# Wild kernel
# ---------------------------------------------------------------------------


def wild_kernel_rank(classification, log_group, clpos):
    """(rank, case tag); case 'ii' has no rank available here."""
    if classification.e > 0:
        return len(clpos.orders), "iii"
    if classification.m == 0:
        return log_group.rank, "i"
    return None, "ii"


def completion_contains_sqrt2(field_data, place):
    from .fields import COMPLETION_FACTS

    if place.completion in COMPLETION_FACTS:
        return place.completion == "ram_sqrt2"
    if place.local_ring is not None:
        return place.local_ring.is_square_2()
    return None


def field_primitivity(field_data, classification, log_group) -> bool:
    """True iff some exceptional place has a degree generating the full
    degree lattice (equivalently, stays inert in the first cyclotomic
    step)."""
    vstar = 2 + field_data.cyclotomic_layer
    prim = any(log_group.degrees[q].val == vstar for q in classification.pe)
    for q in classification.pe:
        sq2 = completion_contains_sqrt2(field_data, q)
        if sq2 is None:
            continue
        if sq2 != (log_group.degrees[q].val >= 3):
            raise PosdivError(
                f"first-layer splitting test disagrees with the degree "
                f"valuation at {q.name}"
            )
    return prim


def _split_two_part(n):
    t = n & -n
    return t, n // t


def _partitions_exact(total, parts):
    """All ascending lists of `parts` positive integers summing to total."""
    if parts == 0:
        return [[]] if total == 0 else []
    if parts == 1:
        return [[total]] if total >= 1 else []
    out = []
    for first in range(1, total // parts + 1):
        for rest in _partitions_exact(total - first, parts - 1):
            if not rest or rest[0] >= first:
                out.append([first] + rest)
    return out


def deduce_wk2(
    k2o_orders,
    index,
    rk2,
    primitive=None,
    deg0_rank=None,
    pos_rank=None,
):
    """Structure of the wild kernel from the tame kernel, the index, the
    2-rank, and (when present) the primitivity refinement.

    Returns a list of invariant factors or the string "ambiguous".
    """
    if index <= 0 or any(o <= 0 for o in k2o_orders):
        raise PosdivError("invalid tame kernel data")
    order_k2o = 1
    for o in k2o_orders:
        order_k2o *= o
    if order_k2o % index:
        raise PosdivError("index does not divide the tame kernel order")
    target = order_k2o // index

    two_target, odd_target = _split_two_part(target)
    # odd part: a subgroup of the odd part of K2O of the forced order
    odd_primes = set()
    for o in k2o_orders:
        n = _split_two_part(o)[1]
        f = 3
        while f * f <= n:
            if n % f == 0:
                odd_primes.add(f)
                while n % f == 0:
                    n //= f
            f += 2
        if n > 1:
            odd_primes.add(n)
    odd_invs = []
    rem = odd_target
    for p in sorted(odd_primes):
        pe = 1
        while rem % p == 0:
            pe *= p
            rem //= p
        if pe == 1:
            continue
        sylow = [x for x in (_p_part(o, p) for o in k2o_orders) if x > 1]
        if len(sylow) == 1:
            odd_invs.append(pe)  # cyclic Sylow: unique subgroup per order
        elif pe == sorted(sylow, reverse=True)[0] and len(sylow) == 1:
            odd_invs.append(pe)
        else:
            return "ambiguous"
    if rem != 1:
        raise PosdivError("wild kernel odd order not attainable inside K2O")

    # 2-part: enumerate candidate types with the prescribed rank
    w2 = two_target.bit_length() - 1
    if two_target == 1:
        cands = [[]] if rk2 == 0 else []
    else:
        if rk2 == 0:
            cands = []
        else:
            cands = [
                [1 << x for x in part] for part in _partitions_exact(w2, rk2)
            ]
    k2o_two = sorted(
        (_split_two_part(o)[0] for o in k2o_orders if o % 2 == 0), reverse=True
    )
    k2o_two = [x for x in k2o_two if x > 1]
    filtered = []
    for cand in cands:
        desc = sorted(cand, reverse=True)
        if len(desc) > len(k2o_two):
            continue
        if all(a <= b for a, b in zip(desc, k2o_two)):
            filtered.append(cand)
    if primitive is False and deg0_rank is not None and pos_rank is not None:
        if deg0_rank < pos_rank:
            # the wild kernel then has a direct Z/2 factor
            filtered = [c for c in filtered if c and min(c) == 2]
    if not filtered:
        raise PosdivError("no abelian 2-group matches the order/rank data")
    if len(filtered) > 1:
        return "ambiguous"
    two_invs = filtered[0]

    # merge the 2-part and odd-part invariants (largest with largest)
    two_sorted = sorted(two_invs, reverse=True)
    odd_sorted = sorted(odd_invs, reverse=True)
    out = []
    for i in range(max(len(two_sorted), len(odd_sorted))):
        a = two_sorted[i] if i < len(two_sorted) else 1
        b = odd_sorted[i] if i < len(odd_sorted) else 1
        out.append(a * b)
    return sorted(out)


def _p_part(n, p):
    out = 1
    while n % p == 0:
        out *= p
        n //= p
    return out
