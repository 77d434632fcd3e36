"""Sign functions, classification of places, and positivity of pairs.

A finite place contributes a sign through the projection of (local norm
times a residue-norm power) onto {+-1}; real places contribute embedding
signs.  Places split into three regimes: where (sign, log-valuation) is
jointly surjective, where the sign is determined by the valuation's
parity, and where the sign is identically trivial.  Only the first kind
enters sign vectors; the second kind enters positivity through coefficient
parities alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PosdivError
from .logarithmic import coeff_parity, log_valuation
from .twoadic import epsilon

PS_FACT, PE_FACT, VDEG_FACT = 0, 1, 2


def place_sign(field_data, place, x, prec=48) -> int:
    """sg_p(x) for a single place and a concrete field element."""
    if place.kind == "real":
        return field_data.real_sign(place, x)
    if place.kind == "complex":
        return 1
    if not place.is_dyadic:
        # epsilon(Np^-v): the norm is odd, so only the parity of v matters
        if place.norm % 4 == 1:
            return 1
        return -1 if field_data.valuation(place, x) % 2 else 1
    n = field_data.local_norm(place, x, prec)
    return epsilon(n)


def place_in_ps(field_data, place) -> bool:
    """Signed places: the completion does not contain a fourth root of -1."""
    if place.kind == "real":
        return True
    if place.kind == "complex":
        return False
    if not place.is_dyadic:
        return place.norm % 4 == 3
    return _dyadic_facts(field_data, place)[PS_FACT]


def place_in_pe(field_data, place) -> bool:
    if place.kind != "finite" or not place.is_dyadic:
        return False
    return _dyadic_facts(field_data, place)[PE_FACT]


def _dyadic_facts(field_data, place):
    from .fields import COMPLETION_FACTS

    facts = COMPLETION_FACTS.get(place.completion)
    if facts is not None:
        return facts
    if place.local_ring is not None:
        return place.local_ring.classification_facts()
    raise PosdivError(f"no classification data for {place.name}")


def dyadic_sign_witness(field_data, place, degree, prec) -> bool:
    """Generic membership test for exceptional places: search the local
    generating set for x with sg(x) * (-1)^v~(x) = -1.

    The test map kills squares, and the generator set spans the local
    multiplicative group modulo squares, so exhausting it is conclusive.
    """
    for gen in place.local_gens:
        s = place_sign(field_data, place, gen, prec)
        lv = log_valuation(field_data, place, gen, prec, degree=degree)
        if s * (-1 if lv.parity() else 1) == -1:
            return True
    return False


@dataclass
class PlaceClassification:
    """The ordered logarithmically-signed places and membership data."""

    field: object
    pe: list  # exceptional places, by increasing degree valuation
    pr: list  # real places
    degrees: dict

    @property
    def pls_order(self):
        return self.pe + self.pr

    @property
    def e(self):
        return len(self.pe)

    @property
    def m(self):
        return len(self.pe) + len(self.pr)

    def in_ps_minus_pls(self, place) -> bool:
        if place.kind != "finite":
            return False
        if not place.is_dyadic:
            return place.norm % 4 == 3
        return place_in_ps(self.field, place) and not place_in_pe(self.field, place)


def classify_places(field_data, log_group, verify_generic=False) -> PlaceClassification:
    """Split the places into the sign regimes and fix the ordering."""
    degrees = dict(log_group.degrees)
    pe = []
    for place in field_data.dyadic_places:
        is_pe = place_in_pe(field_data, place)
        if verify_generic and place.completion:
            # cross-check the closed-form label with the generic witness test
            generic = place_in_ps(field_data, place) and dyadic_sign_witness(
                field_data, place, degrees[place], log_group.prec
            )
            if generic != is_pe:
                raise PosdivError(
                    f"generic exceptional-place test disagrees at {place.name}"
                )
        if is_pe:
            pe.append(place)
    pe.sort(key=lambda pl: degrees[pl].val)
    return PlaceClassification(
        field=field_data, pe=pe, pr=list(field_data.real_places), degrees=degrees
    )


@dataclass(frozen=True)
class SignVector:
    """Element of {+-1}^m aligned with the logarithmically-signed places."""

    entries: tuple

    def __mul__(self, other):
        return SignVector(tuple(a * b for a, b in zip(self.entries, other.entries)))

    def power(self, exponent) -> "SignVector":
        if coeff_parity(exponent) == 0:
            return SignVector(tuple(1 for _ in self.entries))
        return self

    def product(self) -> int:
        p = 1
        for x in self.entries:
            p *= x
        return p

    def is_trivial(self):
        return all(x == 1 for x in self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @staticmethod
    def ones(m):
        return SignVector(tuple(1 for _ in range(m)))


def sign_vector(field_data, classification, x, prec=48) -> SignVector:
    """sg(x) over the ordered logarithmically-signed places."""
    return SignVector(
        tuple(
            place_sign(field_data, pl, x, prec) for pl in classification.pls_order
        )
    )


def sign_vector_of_exponents(tracked_signs, expvec) -> SignVector:
    """Sign vector of a product of tracked generators given as exponents."""
    out = None
    for sv, e in zip(tracked_signs, expvec):
        term = sv.power(e)
        out = term if out is None else out * term
    if out is None:
        raise PosdivError("empty exponent vector")
    return out


def positive_sign_check(classification, divisor, sign_vec: SignVector) -> int:
    """sg(a, e): +1 certifies membership in the positive divisor group.

    Exceptional coordinates of the divisor are ignored (the pair lives
    modulo them); places where the sign equals the valuation parity
    contribute (-1)^coefficient.
    """
    total = 1
    for pl, c in divisor.support.items():
        if classification.in_ps_minus_pls(pl):
            if coeff_parity(c):
                total = -total
    return total * sign_vec.product()
