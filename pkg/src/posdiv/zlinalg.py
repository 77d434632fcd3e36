"""Exact linear algebra over Z/2^eta with valuation-aware pivoting.

Everything here works on plain ``list[list[int]]`` matrices.  Diagonal
entries of a Smith form are normalized to exact powers of two; an entry
that reaches 2^eta is reported with an explicit flag instead of being
truncated away, since that is the tripwire for a group failing to be
finite at the working precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import GrossAlarm


def _v2(n: int) -> int:
    return (n & -n).bit_length() - 1 if n else -1


def mat_mul(a, b, mod=0):
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for t in range(k):
            ait = ai[t]
            if ait:
                bt = b[t]
                for j in range(m):
                    oi[j] += ait * bt[j]
        if mod:
            for j in range(m):
                oi[j] %= mod
    return out


def identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_inv_mod(a, eta):
    """Inverse of a unimodular matrix mod 2^eta by Gaussian elimination."""
    mod = 1 << eta
    n = len(a)
    m = [row[:] + ident_row[:] for row, ident_row in zip(a, identity(n))]
    for col in range(n):
        piv = next(i for i in range(col, n) if m[i][col] % 2 == 1)
        m[col], m[piv] = m[piv], m[col]
        inv = pow(m[col][col], -1, mod)
        m[col] = [(x * inv) % mod for x in m[col]]
        for i in range(n):
            if i != col and m[i][col]:
                f = m[i][col]
                m[i] = [(x - f * y) % mod for x, y in zip(m[i], m[col])]
    return [row[n:] for row in m]


@dataclass
class SmithForm:
    """U * M * V = diag(2^k for k in exponents), all mod 2^eta.

    ``exponents[i] == eta`` means the corresponding invariant factor did not
    terminate below the working modulus ("unbounded at this precision").
    """

    exponents: list
    U: list
    V: list
    eta: int
    rows: int
    cols: int

    @property
    def diagonal(self):
        return [1 << k for k in self.exponents]

    def U_inv(self):
        return mat_inv_mod(self.U, self.eta)

    def V_inv(self):
        return mat_inv_mod(self.V, self.eta)


def smith_normal_form(m, eta) -> SmithForm:
    """Smith form over Z/2^eta, pivoting on minimal 2-valuation entries.

    Ties are broken by lowest row, then lowest column index, which makes the
    output deterministic.  Diagonal entries are normalized to exact powers
    of 2 (unit factors absorbed into U).
    """
    mod = 1 << eta
    a = [[x % mod for x in row] for row in m]
    rows, cols = len(a), len(a[0]) if a else 0
    u = identity(rows)
    v = identity(cols)
    r = 0
    size = min(rows, cols)
    while r < size:
        piv = None
        pv = eta
        for i in range(r, rows):
            for j in range(r, cols):
                if a[i][j]:
                    w = _v2(a[i][j])
                    if w < pv:
                        pv, piv = w, (i, j)
                        if w == 0:
                            break
            if piv and pv == 0:
                break
        if piv is None:
            break
        i0, j0 = piv
        if i0 != r:
            a[r], a[i0] = a[i0], a[r]
            u[r], u[i0] = u[i0], u[r]
        if j0 != r:
            for row in a:
                row[r], row[j0] = row[j0], row[r]
            for row in v:
                row[r], row[j0] = row[j0], row[r]
        # normalize pivot to an exact power of two
        unit = a[r][r] >> pv
        inv = pow(unit, -1, mod)
        a[r] = [(x * inv) % mod for x in a[r]]
        u[r] = [(x * inv) % mod for x in u[r]]
        p = a[r][r]
        for i in range(r + 1, rows):
            if a[i][r]:
                f = a[i][r] >> pv
                a[i] = [(x - f * y) % mod for x, y in zip(a[i], a[r])]
                u[i] = [(x - f * y) % mod for x, y in zip(u[i], u[r])]
        for j in range(r + 1, cols):
            if a[r][j]:
                f = a[r][j] >> pv
                for row in a:
                    row[j] = (row[j] - f * row[r]) % mod
                for row in v:
                    row[j] = (row[j] - f * row[r]) % mod
        r += 1
    exps = []
    for i in range(size):
        d = a[i][i]
        exps.append(_v2(d) if d else eta)
    # global-minimum pivoting yields a non-decreasing chain already;
    # assert rather than re-sort so any violation is loud.
    assert all(exps[i] <= exps[i + 1] for i in range(len(exps) - 1))
    return SmithForm(exps, u, v, eta, rows, cols)


def nullspace_mod(m, eta):
    """Generators of {x : M x = 0 mod 2^eta}, as columns in HNF order.

    Includes the precision-lattice contributions (2^(eta-k) multiples of
    almost-kernel directions), so the span is exactly the solution set.
    """
    snf = smith_normal_form(m, eta)
    cols = snf.cols
    vecs = []
    for i, k in enumerate(snf.exponents):
        if k > 0:
            scale = 1 << (eta - k)
            vecs.append([(snf.V[row][i] * scale) % (1 << eta) for row in range(cols)])
    for j in range(len(snf.exponents), cols):
        vecs.append([snf.V[row][j] % (1 << eta) for row in range(cols)])
    return hnf_columns(vecs, eta)


def hnf_columns(vecs, eta):
    """Canonical (Howell) basis of the span of vecs modulo 2^eta.

    Echelon with 2-power leading entries, entries above each leading entry
    reduced, and annihilator closure so that span equality is decidable by
    comparing bases.
    """
    mod = 1 << eta
    if not vecs:
        return []
    n = len(vecs[0])
    work = [[x % mod for x in v] for v in vecs]
    work = [w for w in work if any(w)]
    basis = []
    for col in range(n):
        best = None
        bv = None
        for g in work:
            if g[col]:
                w = _v2(g[col])
                if best is None or w < bv:
                    best, bv = g, w
        if best is None:
            continue
        work.remove(best)
        inv = pow(best[col] >> bv, -1, mod)
        nxt = []
        for g in work:
            if g[col]:
                f = ((g[col] >> bv) * inv) % mod
                g = [(a - f * b) % mod for a, b in zip(g, best)]
            if any(g):
                nxt.append(g)
        work = nxt
        # annihilator closure keeps the span canonical mod 2^eta
        if bv > 0:
            ann = [(x << (eta - bv)) % mod for x in best]
            if any(ann):
                work.append(ann)
        basis.append((col, bv, best))
    basis.sort()
    out = []
    for col, bv, g in basis:
        unit_inv = pow(g[col] >> bv, -1, mod)
        out.append([(x * unit_inv) % mod for x in g])
    # reduce entries above leading positions, bottom-up
    for i in range(len(out) - 1, -1, -1):
        col = basis[i][0]
        lead = out[i][col]
        for j in range(i):
            if out[j][col]:
                f = out[j][col] // lead
                out[j] = [(a - f * b) % mod for a, b in zip(out[j], out[i])]
    return out


def solve_mod(m, b, eta):
    """A particular solution of M x = b mod 2^eta, or None."""
    snf = smith_normal_form(m, eta)
    mod = 1 << eta
    ub = [sum(snf.U[i][j] * b[j] for j in range(len(b))) % mod for i in range(snf.rows)]
    z = [0] * snf.cols
    for i in range(snf.rows):
        if i < len(snf.exponents):
            k = snf.exponents[i]
            d = 1 << k
            if ub[i] % d:
                return None
            if k < eta:
                z[i] = (ub[i] >> k) % (mod >> k)
            else:
                z[i] = 0
        elif ub[i] % mod:
            return None
    x = [sum(snf.V[i][j] * z[j] for j in range(snf.cols)) % mod for i in range(snf.cols)]
    return x


@dataclass
class AbelianGroupType:
    """Invariant factors of a finite abelian 2-group, ascending 2-powers."""

    orders: tuple

    def __init__(self, orders):
        orders = tuple(sorted(int(o) for o in orders if int(o) > 1))
        for o in orders:
            if o & (o - 1):
                raise ValueError(f"{o} is not a power of 2")
        object.__setattr__(self, "orders", orders)

    @property
    def rank(self):
        return len(self.orders)

    @property
    def order(self):
        n = 1
        for o in self.orders:
            n *= o
        return n

    def __eq__(self, other):
        if isinstance(other, (list, tuple)):
            other = AbelianGroupType(other)
        return isinstance(other, AbelianGroupType) and self.orders == other.orders

    def __hash__(self):
        return hash(self.orders)

    def __iter__(self):
        return iter(self.orders)

    def __repr__(self):
        return f"AbelianGroupType{list(self.orders)}"

    def render(self):
        if not self.orders:
            return "[ ]"
        return "[ " + ",".join(str(o) for o in self.orders) + " ]"

    def is_subgroup_type_of(self, other):
        """Dominance test on descending invariants (sufficient criterion)."""
        a = sorted(self.orders, reverse=True)
        b = sorted(other.orders, reverse=True)
        if len(a) > len(b):
            return False
        return all(x <= y for x, y in zip(a, b))


@dataclass
class GroupPresentation:
    """Cokernel of a relation matrix, with change-of-basis data.

    Generators are indexed 0..n-1; ``relations`` has one relation per row in
    generator coordinates.  After the Smith computation:

    - ``orders[i]`` is the order of canonical generator i (2-power, possibly
      1 for trivial and 2^eta flagged unbounded);
    - canonical generator i is sum_j gen_expr[i][j] * generator_j;
    - original generator j equals sum_i coords[j][i] * canonical_i;
    - ``relation_combos[i]`` expresses order_i * canonical_i as an integer
      combination of the original relation rows.
    """

    n_gens: int
    relations: list
    eta: int
    slack: int = 0  # invariants >= 2^(eta - slack) count as unbounded
    orders: list = field(default_factory=list)
    gen_expr: list = field(default_factory=list)
    coords: list = field(default_factory=list)
    relation_combos: list = field(default_factory=list)
    unbounded: bool = False

    def __post_init__(self):
        eta = self.eta
        mod = 1 << eta
        n = self.n_gens
        rels = [[x % mod for x in row] for row in self.relations]
        if not rels:
            rels = [[0] * n]
        # columns of A = relations^T span the relation lattice
        a = [[rels[r][g] for r in range(len(rels))] for g in range(n)]
        snf = smith_normal_form(a, eta)
        uinv = snf.U_inv()
        orders = []
        for i in range(n):
            k = snf.exponents[i] if i < len(snf.exponents) else eta
            orders.append(1 << k)
        self.orders = orders
        self.unbounded = any(o >= (1 << (eta - self.slack)) for o in orders)
        # canonical generator i = sum_j uinv[j][i] * gen_j
        self.gen_expr = [[uinv[j][i] % mod for j in range(n)] for i in range(n)]
        self.coords = [[snf.U[i][j] % mod for i in range(n)] for j in range(n)]
        # order_i * canonical_i = A . (V e_i) -> combo over relation rows
        self.relation_combos = [
            [snf.V[r][i] % mod if r < len(snf.V) else 0 for r in range(len(rels))]
            for i in range(min(n, len(snf.exponents)))
        ]
        self._snf = snf

    def type(self, alarm=False) -> AbelianGroupType:
        if self.unbounded and alarm:
            raise GrossAlarm(
                f"invariant factor reached 2^{self.eta - self.slack}; "
                "group not finite at this precision"
            )
        return AbelianGroupType(
            [o for o in self.orders if 1 < o < (1 << (self.eta - self.slack))]
        )

    def decompose(self, vec):
        """Write vec = sum c_i * canonical_i + lattice part.

        Returns (coeffs mod orders, combo over relation rows realizing the
        lattice part).
        """
        mod = 1 << self.eta
        y = [
            sum(self._snf.U[i][j] * vec[j] for j in range(self.n_gens)) % mod
            for i in range(self.n_gens)
        ]
        coeffs = []
        combo = [0] * max(len(self.relations), 1)
        for i in range(self.n_gens):
            o = self.orders[i]
            c = y[i] % o
            z = (y[i] - c) // o
            coeffs.append(c)
            if z and i < len(self.relation_combos):
                for r, f in enumerate(self.relation_combos[i]):
                    combo[r] = (combo[r] + z * f) % mod
        return coeffs, combo[: len(self.relations)]


def cokernel_type(n_gens, relations, eta, alarm=False) -> AbelianGroupType:
    return GroupPresentation(n_gens, relations, eta).type(alarm=alarm)


# ---------------------------------------------------------------------------
# Exact integer helpers (small dense matrices only)
# ---------------------------------------------------------------------------


def smith_invariants_int(m):
    """Invariant factors (> 1) of an integer matrix's cokernel, exactly."""
    a = [row[:] for row in m]
    rows = len(a)
    cols = len(a[0]) if a else 0
    n = min(rows, cols)
    invs = []
    r = 0
    while r < n:
        piv = None
        best = None
        for i in range(r, rows):
            for j in range(r, cols):
                if a[i][j] and (best is None or abs(a[i][j]) < best):
                    best, piv = abs(a[i][j]), (i, j)
        if piv is None:
            break
        i0, j0 = piv
        a[r], a[i0] = a[i0], a[r]
        for row in a:
            row[r], row[j0] = row[j0], row[r]
        progress = True
        while progress:
            progress = False
            for i in range(r + 1, rows):
                if a[i][r]:
                    q = a[i][r] // a[r][r]
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    if a[i][r]:
                        a[r], a[i] = a[i], a[r]
                        progress = True
            for j in range(r + 1, cols):
                if a[r][j]:
                    q = a[r][j] // a[r][r]
                    for row in a:
                        row[j] -= q * row[r]
                    if a[r][j]:
                        # swap columns r and j
                        for row in a:
                            row[r], row[j] = row[j], row[r]
                        progress = True
        invs.append(abs(a[r][r]))
        r += 1
    # enforce divisibility chain
    changed = True
    while changed:
        changed = False
        for i in range(len(invs) - 1):
            if invs[i + 1] % invs[i]:
                g = math.gcd(invs[i], invs[i + 1])
                invs[i], invs[i + 1] = g, invs[i] * invs[i + 1] // g
                changed = True
    return sorted(x for x in invs if x > 1)


def integer_kernel(m):
    """Basis of {x in Z^rows : x * M = 0} for an integer matrix, exactly."""
    rows = len(m)
    cols = len(m[0]) if m else 0
    # column-reduce the augmented [M | I] by integer row operations
    aug = [list(m[i]) + [1 if j == i else 0 for j in range(rows)] for i in range(rows)]
    pivot_row = 0
    for col in range(cols):
        piv = None
        for i in range(pivot_row, rows):
            if aug[i][col] and (piv is None or abs(aug[i][col]) < abs(aug[piv][col])):
                piv = i
        if piv is None:
            continue
        aug[pivot_row], aug[piv] = aug[piv], aug[pivot_row]
        cleaned = False
        while not cleaned:
            cleaned = True
            for i in range(pivot_row + 1, rows):
                if aug[i][col]:
                    q = aug[i][col] // aug[pivot_row][col]
                    aug[i] = [x - q * y for x, y in zip(aug[i], aug[pivot_row])]
                    if aug[i][col]:
                        aug[pivot_row], aug[i] = aug[i], aug[pivot_row]
                        cleaned = False
        pivot_row += 1
    return [row[cols:] for row in aug[pivot_row:]]
