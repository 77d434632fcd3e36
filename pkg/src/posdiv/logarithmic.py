"""Logarithmic valuations, 2-adic place degrees, and the logarithmic
class group.

For a place not above 2 the logarithmic valuation is the ordinary one and
the degree is Log of the residue norm.  At a dyadic place the degree is
the element of minimal valuation in the lattice spanned by Log of local
norms of a topological generating set, and the logarithmic valuation of x
is -Log(N(x)) divided by that degree; integrality of the quotient is a
structural guarantee, so a failure aborts loudly rather than degrading.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GrossAlarm, NotInSpanError, PosdivError
from .twoadic import TwoAdic, iwasawa_log, v2
from .zlinalg import GroupPresentation

# bits reserved at the precision ceiling: invariant factors reaching
# 2^(prec - PRECISION_SLACK) are treated as "not finite at this precision"
PRECISION_SLACK = 6


class Divisor:
    """Finite-support divisor with 2-adic integer coefficients."""

    def __init__(self, support=None):
        self.support = {}
        if support:
            for place, coeff in (support.items() if isinstance(support, dict) else support):
                self.add(place, coeff)

    def add(self, place, coeff):
        if isinstance(coeff, TwoAdic) and coeff.is_zero:
            return
        if isinstance(coeff, int) and coeff == 0:
            return
        if place in self.support:
            total = _coeff_add(self.support[place], coeff)
            if _coeff_is_zero(total):
                del self.support[place]
            else:
                self.support[place] = total
        else:
            self.support[place] = coeff

    def coeff(self, place):
        return self.support.get(place, 0)

    def scaled(self, factor):
        out = Divisor()
        for pl, c in self.support.items():
            out.add(pl, _coeff_mul(c, factor))
        return out

    def plus(self, other):
        out = Divisor(dict(self.support))
        for pl, c in other.support.items():
            out.add(pl, c)
        return out

    def degree(self, degree_map, prec) -> TwoAdic:
        total = TwoAdic.zero()
        for pl, c in self.support.items():
            d = degree_map(pl)
            total = total + (_coeff_to_twoadic(c, prec) * d)
        return total

    def places(self):
        return list(self.support)

    def __repr__(self):
        parts = [f"{c}*{pl.name}" for pl, c in self.support.items()]
        return "Divisor(" + " + ".join(parts) + ")" if parts else "Divisor(0)"


_COEFF_BITS = 160  # comfortably above any working precision in use


def _coeff_add(a, b):
    if isinstance(a, int) and isinstance(b, int):
        return a + b
    return _coeff_to_twoadic(a, _COEFF_BITS) + _coeff_to_twoadic(b, _COEFF_BITS)


def _coeff_mul(a, f):
    if isinstance(a, int) and isinstance(f, int):
        return a * f
    return _coeff_to_twoadic(a, _COEFF_BITS) * _coeff_to_twoadic(f, _COEFF_BITS)


def _coeff_is_zero(c):
    return (isinstance(c, int) and c == 0) or (isinstance(c, TwoAdic) and c.is_zero)


def _coeff_to_twoadic(c, prec) -> TwoAdic:
    return c if isinstance(c, TwoAdic) else TwoAdic.from_int(c, prec)


def coeff_parity(c) -> int:
    if isinstance(c, int):
        return c & 1
    return c.parity()


def coeff_residue(c, bits) -> int:
    if isinstance(c, int):
        return c % (1 << bits)
    return c.residue(bits)


# ---------------------------------------------------------------------------
# Place degrees and logarithmic valuations
# ---------------------------------------------------------------------------


def place_degree(field_data, place, prec, rescale=None) -> TwoAdic:
    """deg p: Log(Np) away from 2; the minimal-valuation Log-of-norm over
    the local generating set at a dyadic place (pinned to that value)."""
    if place.kind != "finite":
        raise PosdivError("degrees are defined for finite places")
    if not place.is_dyadic:
        d = iwasawa_log(TwoAdic.from_int(place.norm, prec + 12), prec + 6)
        return _apply_rescale(d, place, rescale, prec)
    if place.local_ring is not None:
        d = place.local_ring.degree_lattice_min(prec)
        return _apply_rescale(d, place, rescale, prec)
    best = None
    for gen in place.local_gens:
        n = field_data.local_norm(place, gen, prec + 12)
        lg = iwasawa_log(n, prec + 6)
        if lg.is_zero:
            continue
        if best is None or lg.val < best.val:
            best = -lg
    if best is None:
        raise PosdivError(f"no generator with nonzero degree at {place.name}")
    from .fields import COMPLETION_FACTS

    facts = COMPLETION_FACTS.get(place.completion)
    if facts is not None and best.val != facts[2]:
        raise PosdivError(
            f"degree valuation {best.val} at {place.name} contradicts the "
            f"completion type ({facts[2]} expected)"
        )
    return _apply_rescale(best, place, rescale, prec)


def _apply_rescale(d, place, rescale, prec):
    if rescale and place in rescale:
        return d * TwoAdic.from_int(rescale[place], prec + 6)
    return d


def log_valuation(field_data, place, x, prec, degree=None) -> TwoAdic:
    """The logarithmic valuation of x at a finite place (a 2-adic integer)."""
    if not place.is_dyadic:
        return TwoAdic.from_int(field_data.valuation(place, x), prec)
    if degree is None:
        degree = place_degree(field_data, place, prec)
    n = field_data.local_norm(place, x, prec + 12)
    lg = iwasawa_log(n, prec + 6)
    if lg.is_zero:
        return TwoAdic.zero(min(prec, (lg.zero_prec or prec) - degree.val))
    return (-lg).divide_integral(degree)


def log_divisor(field_data, x, prec, degree_map=None) -> Divisor:
    """div~(x): ordinary valuations away from 2, logarithmic ones above 2."""
    div = Divisor()
    for place, v in field_data.element_support(x):
        if not place.is_dyadic:
            div.add(place, v)
    for place in field_data.dyadic_places:
        deg = degree_map(place) if degree_map else None
        div.add(place, log_valuation(field_data, place, x, prec, degree=deg))
    return div


# ---------------------------------------------------------------------------
# The logarithmic class group
# ---------------------------------------------------------------------------


@dataclass
class LogClassGroup:
    """Cl~ on a factor base, with enough tracking to decompose divisors.

    ``generators`` are degree-zero divisors; generator i has order
    ``orders[i]``; the relation realizing orders[i]*generators[i] as a
    principal logarithmic divisor is ``order_elements[i]``, an exponent
    vector over ``field.tracked``.
    """

    field: object
    prec: int
    places: list  # factor base, odd first then dyadic
    degrees: dict  # place -> TwoAdic
    base_place: object  # the primitive divisor's place
    base_index: int
    ratios: dict  # place -> deg(place)/deg(base)
    presentation: GroupPresentation
    row_elements: list  # tracked-element index per relation row
    gen_indices: list  # presentation indices of the nontrivial generators
    generators: list = field(default_factory=list)
    orders: list = field(default_factory=list)
    order_elements: list = field(default_factory=list)
    tracked_logvals: dict = field(default_factory=dict)
    arb_invariants: list = field(default_factory=list)

    @property
    def rank(self):
        return len(self.generators)

    def type(self):
        from .zlinalg import AbelianGroupType

        return AbelianGroupType(self.orders)

    def degree_of(self, place):
        return self.degrees[place]

    def m_generator_divisor(self, j):
        """The degree-zero divisor place_j - (deg place_j / deg b) * b."""
        pl = self.non_base_places()[j]
        div = Divisor()
        div.add(pl, 1)
        div.add(self.base_place, -self.ratios[pl])
        return div

    def non_base_places(self):
        return [p for i, p in enumerate(self.places) if i != self.base_index]

    def decompose(self, divisor: Divisor):
        """divisor = sum c_i * generators[i] + div~(alpha); returns
        (coeffs aligned with generators, alpha exponent vector)."""
        prec = self.prec
        coords = []
        nb = self.non_base_places()
        index = {p: i for i, p in enumerate(nb)}
        vec = [0] * len(nb)
        seen_base = TwoAdic.zero()
        for pl, c in divisor.support.items():
            if pl is self.base_place:
                seen_base = seen_base + _coeff_to_twoadic(c, prec)
                continue
            if pl not in index:
                raise NotInSpanError(f"{pl.name} outside the factor base")
            vec[index[pl]] = coeff_residue(c, prec)
        # degree-zero consistency: the base coefficient must be determined
        implied = TwoAdic.zero()
        for pl, c in divisor.support.items():
            if pl is not self.base_place:
                implied = implied + _coeff_to_twoadic(c, prec) * self.ratios[pl]
        total = seen_base + implied
        if not total.same(TwoAdic.zero(), bits=self.prec - 4):
            raise NotInSpanError("divisor does not have degree zero")
        coeffs_all, combo = self.presentation.decompose(vec)
        coeffs = [coeffs_all[i] for i in self.gen_indices]
        alpha = self.combine_rows(combo)
        return coeffs, alpha

    def combine_rows(self, combo):
        """Exponent vector over field.tracked from a relation-row combo."""
        n_tracked = len(self.field.tracked)
        out = [0] * n_tracked
        for r, f_ in enumerate(combo):
            if f_:
                out[self.row_elements[r]] = (
                    out[self.row_elements[r]] + f_
                ) % (1 << self.prec)
        return out

    def generator_divisor(self, i) -> Divisor:
        return self.generators[i]

    def exponent_div_tilde(self, expvec) -> Divisor:
        """div~ of a tracked-exponent vector, from cached per-place data."""
        div = Divisor()
        for t_idx, e in enumerate(expvec):
            if (isinstance(e, int) and e == 0) or (
                isinstance(e, TwoAdic) and e.is_zero
            ):
                continue
            for pl, val in self.tracked_logvals[t_idx].items():
                div.add(pl, _coeff_mul(val, e))
        return div


def compute_log_class_group(
    field_data, prec, rescale=None, base_choice=0
) -> LogClassGroup:
    """Build Cl~ on the factor base, tracking realizing elements.

    ``base_choice`` picks among the places of minimal degree valuation
    (0 = default); ``rescale`` multiplies chosen dyadic degrees by odd
    units, which must not change any invariant.
    """
    places = list(field_data.fb_odd) + list(field_data.dyadic_places)
    degrees = {pl: place_degree(field_data, pl, prec, rescale) for pl in places}

    base_place, base_index = choose_primitive_place(
        field_data, places, degrees, base_choice
    )
    ratios = {}
    for pl in places:
        if pl is base_place:
            continue
        ratios[pl] = degrees[pl].divide_integral(degrees[base_place])

    # per-tracked logarithmic valuation data over the factor base
    tracked_logvals = {}
    for idx, tr in enumerate(field_data.tracked):
        vals = {}
        for pl, v in tr.val_vector.items():
            if not pl.is_dyadic:
                vals[pl] = v
        for pl in field_data.dyadic_places:
            lv = log_valuation(field_data, pl, tr.element, prec, degree=degrees[pl])
            if not lv.is_zero:
                vals[pl] = lv
        tracked_logvals[idx] = vals

    # relation rows over the non-base coordinates
    nb = [p for i, p in enumerate(places) if i != base_index]
    rows = []
    row_elements = []
    arb_rows = []
    for idx, tr in enumerate(field_data.tracked):
        if tr.is_torsion:
            continue
        vals = tracked_logvals[idx]
        row = [coeff_residue(vals.get(pl, 0), prec) for pl in nb]
        rows.append(row)
        row_elements.append(idx)
        arb_rows.append([coeff_residue(vals.get(pl, 0), prec) for pl in places])
        # degree-zero check on the full row (within slack)
        total = TwoAdic.zero()
        for pl in places:
            total = total + _coeff_to_twoadic(vals.get(pl, 0), prec) * degrees[pl]
        if not total.same(TwoAdic.zero(), bits=prec - 2):
            raise PosdivError(
                f"relation of {tr.name} has nonzero degree at precision"
            )

    slack = PRECISION_SLACK
    pres = GroupPresentation(len(nb), rows, prec, slack=slack)
    if pres.unbounded:
        raise GrossAlarm(
            "logarithmic class group not finite at this precision"
        )

    # arbitrary-degree presentation: expect exactly one unbounded factor
    arb_pres = GroupPresentation(len(places), arb_rows, prec, slack=slack)
    flags = [o for o in arb_pres.orders if o >= (1 << (prec - slack))]
    if len(flags) != 1:
        raise GrossAlarm(
            f"arbitrary-degree logarithmic presentation has {len(flags)} "
            "unbounded factors; expected exactly 1"
        )
    arb_invariants = [o for o in arb_pres.orders if 1 < o < (1 << (prec - slack))]

    group = LogClassGroup(
        field=field_data,
        prec=prec,
        places=places,
        degrees=degrees,
        base_place=base_place,
        base_index=base_index,
        ratios=ratios,
        presentation=pres,
        row_elements=row_elements,
        gen_indices=[],
        tracked_logvals=tracked_logvals,
        arb_invariants=arb_invariants,
    )

    gen_indices = []
    generators = []
    orders = []
    order_elements = []
    mod = 1 << prec
    for i, o in enumerate(pres.orders):
        if not (1 < o < mod):
            continue
        gen_indices.append(i)
        div = Divisor()
        for j, c in enumerate(pres.gen_expr[i]):
            if c:
                pl = nb[j]
                div.add(pl, c)
                div.add(base_place, _coeff_mul(-c, group.ratios[pl]))
        generators.append(div)
        orders.append(o)
        order_elements.append(group.combine_rows(pres.relation_combos[i]))
    group.gen_indices = gen_indices
    group.generators = generators
    group.orders = orders
    group.order_elements = order_elements

    # torsion of the arbitrary-degree presentation must agree
    if sorted(arb_invariants) != sorted(orders):
        raise PosdivError(
            f"degree-zero extraction {sorted(orders)} disagrees with the "
            f"arbitrary-degree torsion {sorted(arb_invariants)}"
        )
    return group


def choose_primitive_place(field_data, places, degrees, choice=0):
    """A place whose degree has minimal valuation (dyadic preferred on
    ties); ``choice`` selects among all valid candidates."""
    expected = 2 + field_data.cyclotomic_layer
    best_val = min(degrees[pl].val for pl in places)
    if best_val > expected:
        raise PosdivError(
            "no primitive place in factor base (degree valuations all "
            f"exceed {expected}); enlarge the factor base"
        )
    if best_val < expected:
        raise PosdivError(
            f"degree valuation {best_val} below the structural minimum "
            f"{expected}: arithmetic bug"
        )
    candidates = [pl for pl in places if degrees[pl].val == best_val]
    candidates.sort(key=lambda pl: (not pl.is_dyadic,))
    if choice >= len(candidates):
        raise PosdivError(f"only {len(candidates)} primitive candidates exist")
    pick = candidates[choice]
    return pick, places.index(pick)


def compute_cl_prime(field_data):
    """2-part of the quotient of the class group by the dyadic classes."""
    from .zlinalg import AbelianGroupType

    return AbelianGroupType(field_data.cl_prime_invariants)
