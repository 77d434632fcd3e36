"""End-to-end analysis of one field, with adaptive precision.

Runs completion classification, the logarithmic class group, the positive
class group and its degree-zero part, and the wild-kernel rank; the whole
computation is repeated with a larger working precision until two
consecutive runs agree on every invariant factor.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

from .errors import GrossAlarm, PosdivError, UnsupportedCaseError
from .fields import quadratic_field
from .logarithmic import compute_cl_prime, compute_log_class_group
from .positive import (
    compute_cl_pos,
    compute_cl_pos_deg0,
    deduce_wk2,
    exceptional_units,
    field_primitivity,
    positive_units,
    wild_kernel_rank,
)
from .signatures import classify_places, sign_vector
from .twoadic import PrecisionPolicy
from .zlinalg import AbelianGroupType


@dataclass
class AnalysisReport:
    label: str
    disc: object
    degree: int
    n_dyadic: int
    n_exceptional: int
    cl: list
    cl_prime: list
    cl_log: list
    cl_pos: object  # list or None (cases i/ii)
    cl_pos_deg0: object  # transcribed-route type (list) or None
    cl_pos_deg0_kernel: object  # direct-kernel type (list) or None
    deg0_methods_agree: object
    rk2: object  # int or None for case ii
    case: str
    primitive: object
    wk2: object = None  # list, "ambiguous", or None
    precision: int = 0
    positive_unit_index: int = 0
    timings: dict = dc_field(default_factory=dict)

    def group(self, name):
        v = getattr(self, name)
        return None if v is None else AbelianGroupType(v)


@dataclass
class FieldResult:
    """One fixed-precision pass (the stabilization harness compares these)."""

    cl_log: list
    cl_pos: object
    cl_pos_deg0: object
    cl_pos_deg0_kernel: object
    deg0_agree: object
    rk2: object
    case: str
    primitive: object
    pos_unit_index: int

    def key(self):
        return (
            tuple(self.cl_log),
            tuple(self.cl_pos) if self.cl_pos is not None else None,
            tuple(self.cl_pos_deg0) if self.cl_pos_deg0 is not None else None,
            tuple(self.cl_pos_deg0_kernel)
            if self.cl_pos_deg0_kernel is not None
            else None,
            self.rk2,
            self.case,
            self.primitive,
        )


def run_once(field_data, prec, rescale=None, base_choice=0, verify_generic=False):
    """The whole pipeline at one working precision."""
    log_group = compute_log_class_group(
        field_data, prec, rescale=rescale, base_choice=base_choice
    )
    classification = classify_places(
        field_data, log_group, verify_generic=verify_generic
    )
    tracked_signs = [
        sign_vector(field_data, classification, t.element, prec + 12)
        for t in field_data.tracked
    ]
    if classification.e > 0:
        exc = exceptional_units(
            field_data, log_group, classification, prec, tracked_signs
        )
        _, pos_index = positive_units(exc, classification)
        clpos = compute_cl_pos(
            field_data, log_group, classification, exc, prec, tracked_signs
        )
        t_matrix, t_kernel, agree = compute_cl_pos_deg0(clpos, prec)
        rk2, case = wild_kernel_rank(classification, log_group, clpos)
        primitive = field_primitivity(field_data, classification, log_group)
        result = FieldResult(
            cl_log=sorted(log_group.orders),
            cl_pos=list(clpos.type().orders),
            cl_pos_deg0=list(t_matrix.orders),
            cl_pos_deg0_kernel=list(t_kernel.orders),
            deg0_agree=agree,
            rk2=rk2,
            case=case,
            primitive=primitive,
            pos_unit_index=pos_index,
        )
        return result, log_group, classification, clpos
    rk2, case = wild_kernel_rank(classification, log_group, None)
    result = FieldResult(
        cl_log=sorted(log_group.orders),
        cl_pos=None,
        cl_pos_deg0=None,
        cl_pos_deg0_kernel=None,
        deg0_agree=None,
        rk2=rk2,
        case=case,
        primitive=None,
        pos_unit_index=0,
    )
    return result, log_group, classification, None


def analyze_field(
    field_data,
    policy: PrecisionPolicy = PrecisionPolicy(),
    k2=None,
    index=None,
    rescale=None,
    base_choice=0,
    verify_generic=False,
) -> AnalysisReport:
    """Stabilized analysis: grow precision until two runs agree."""
    t0 = time.perf_counter()
    prec = policy.initial
    history = []
    last = None
    rounds = 0
    while True:
        result, log_group, classification, clpos = run_once(
            field_data,
            prec,
            rescale=rescale,
            base_choice=base_choice,
            verify_generic=verify_generic,
        )
        history.append(result.key())
        if len(history) >= policy.stable_runs and len(set(history[-policy.stable_runs :])) == 1:
            last = result
            break
        prec += policy.growth
        rounds += 1
        if rounds >= policy.max_rounds:
            raise GrossAlarm(
                f"invariants did not stabilize after {rounds} precision rounds"
            )
    wk2 = None
    if k2 is not None and last.case == "iii":
        deg0_rank = len(last.cl_pos_deg0_kernel) if last.cl_pos_deg0_kernel else 0
        wk2 = deduce_wk2(
            k2,
            index if index is not None else 1,
            last.rk2,
            primitive=last.primitive,
            deg0_rank=deg0_rank,
            pos_rank=len(last.cl_pos),
        )
    return AnalysisReport(
        label=field_data.label,
        disc=field_data.disc,
        degree=field_data.degree,
        n_dyadic=len(field_data.dyadic_places),
        n_exceptional=len(classification.pe),
        cl=list(field_data.cl_invariants),
        cl_prime=list(compute_cl_prime(field_data).orders),
        cl_log=last.cl_log,
        cl_pos=last.cl_pos,
        cl_pos_deg0=last.cl_pos_deg0,
        cl_pos_deg0_kernel=last.cl_pos_deg0_kernel,
        deg0_methods_agree=last.deg0_agree,
        rk2=last.rk2,
        case=last.case,
        primitive=last.primitive,
        wk2=wk2,
        precision=prec,
        positive_unit_index=last.pos_unit_index,
        timings={"total": time.perf_counter() - t0},
    )


def analyze_discriminant(d, policy=PrecisionPolicy(), **kw) -> AnalysisReport:
    return analyze_field(quadratic_field(d), policy=policy, **kw)
