import itertools
import random

from posdiv.zlinalg import (
    AbelianGroupType,
    GroupPresentation,
    cokernel_type,
    hnf_columns,
    integer_kernel,
    mat_mul,
    nullspace_mod,
    smith_invariants_int,
    smith_normal_form,
    solve_mod,
)

ETA = 8


def brute_cokernel_type(rows, n, kbits=3):
    """Oracle: enumerate (Z/2^kbits)^n modulo the row span, read off the type.

    Exact for matrices whose rows include 2^kbits * e_i, which the callers
    arrange.  Invariant factors are recovered from the 2^j-torsion counts
    N_j = #{x in quotient : 2^j x = 0} via N_j = prod_i min(2^j, d_i).
    """
    mod = 1 << kbits
    zero = tuple([0] * n)
    span = {zero}
    frontier = [zero]
    gens = [tuple(x % mod for x in r) for r in rows]
    while frontier:
        cur = frontier.pop()
        for g in gens:
            nxt = tuple((a + b) % mod for a, b in zip(cur, g))
            if nxt not in span:
                span.add(nxt)
                frontier.append(nxt)
    torsion = []
    for j in range(kbits + 1):
        c = sum(
            1
            for x in itertools.product(range(mod), repeat=n)
            if tuple((a << j) % mod for a in x) in span
        )
        torsion.append(c // len(span))
    ranks = []
    for j in range(1, kbits + 1):
        ranks.append((torsion[j] // torsion[j - 1]).bit_length() - 1)
    invs = []
    for j in range(len(ranks)):
        nxt = ranks[j + 1] if j + 1 < len(ranks) else 0
        invs.extend([1 << (j + 1)] * (ranks[j] - nxt))
    return AbelianGroupType(invs)


def test_snf_transforms_reconstruct():
    rng = random.Random(3)
    for _ in range(50):
        rows = rng.randrange(1, 4)
        cols = rng.randrange(1, 4)
        m = [[rng.randrange(-8, 8) for _ in range(cols)] for _ in range(rows)]
        snf = smith_normal_form(m, ETA)
        umv = mat_mul(mat_mul(snf.U, m), snf.V, 1 << ETA)
        for i in range(rows):
            for j in range(cols):
                expect = snf.diagonal[i] % (1 << ETA) if i == j and i < len(snf.exponents) else 0
                assert umv[i][j] % (1 << ETA) == expect
        # unimodularity: U, V invertible mod 2^eta
        snf.U_inv()
        snf.V_inv()


def test_snf_example_diag():
    t = cokernel_type(2, [[2, 0], [0, 4]], ETA)
    assert t == [2, 4]


def test_snf_example_overdetermined():
    # three relations on two generators
    t = cokernel_type(2, [[2, 0], [0, 2], [1, 1]], ETA)
    assert t == brute_cokernel_type([[2, 0], [0, 2], [1, 1]], 2) == [2]


def test_snf_zero_matrix_flags_unbounded():
    pres = GroupPresentation(2, [[0, 0]], ETA)
    assert pres.unbounded
    assert pres.type() == []


def test_cokernel_examples():
    assert cokernel_type(1, [[4]], ETA) == [4]
    assert cokernel_type(2, [[2, 0], [0, 2]], ETA) == [2, 2]


def test_cokernel_random_vs_bruteforce():
    rng = random.Random(17)
    for trial in range(200):
        n = rng.randrange(1, 4)
        r = rng.randrange(1, 4)
        rows = [[rng.randrange(8) for _ in range(n)] for _ in range(r)]
        # keep the quotient finite: add scalar rows 8*e_i
        rows += [[8 if i == j else 0 for j in range(n)] for i in range(n)]
        got = cokernel_type(n, rows, ETA)
        expect = brute_cokernel_type(rows, n)
        assert got == expect, (rows, got, expect)


def test_cokernel_invariant_under_permutation():
    rng = random.Random(5)
    for _ in range(40):
        n = 3
        rows = [[rng.randrange(8) for _ in range(n)] for _ in range(3)]
        rows += [[8 if i == j else 0 for j in range(n)] for i in range(n)]
        t0 = cokernel_type(n, rows, ETA)
        perm_rows = rows[::-1]
        cols = list(range(n))
        rng.shuffle(cols)
        perm = [[row[c] for c in cols] for row in perm_rows]
        assert cokernel_type(n, perm, ETA) == t0


def brute_nullspace(m, eta):
    mod = 1 << eta
    n = len(m[0])
    sols = set()
    for x in itertools.product(range(mod), repeat=n):
        if all(sum(r[j] * x[j] for j in range(n)) % mod == 0 for r in m):
            sols.add(x)
    return sols


def span_mod(vecs, n, eta):
    mod = 1 << eta
    seen = {tuple([0] * n)}
    frontier = [tuple([0] * n)]
    while frontier:
        cur = frontier.pop()
        for v in vecs:
            nxt = tuple((a + b) % mod for a, b in zip(cur, v))
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def test_nullspace_trivial_cases():
    assert nullspace_mod([[0]], 4) == [[1]]
    # 2^eta = 0 mod 2^eta: same solution set as the zero matrix
    assert nullspace_mod([[16]], 4) == [[1]]


def test_nullspace_example_enumerated():
    basis = nullspace_mod([[2, 4]], 4)
    got = span_mod(basis, 2, 4)
    expect = brute_nullspace([[2, 4]], 4)
    assert got == expect
    assert (2, 15) in expect  # (2, -1) is a solution


def test_nullspace_random_vs_bruteforce():
    rng = random.Random(23)
    for _ in range(100):
        rows = rng.randrange(1, 3)
        n = rng.randrange(1, 3)
        m = [[rng.randrange(16) for _ in range(n)] for _ in range(rows)]
        basis = nullspace_mod(m, 4)
        assert span_mod(basis, n, 4) == brute_nullspace(m, 4)
        mod = 1 << 4
        for v in basis:
            assert all(sum(r[j] * v[j] for j in range(n)) % mod == 0 for r in m)


def test_solve_mod():
    assert solve_mod([[1, 0], [0, 1]], [3, 5], ETA) == [3, 5]
    assert solve_mod([[2]], [1], ETA) is None
    x = solve_mod([[3]], [1], 4)
    assert x is not None and (3 * x[0]) % 16 == 1


def test_solve_mod_random():
    rng = random.Random(29)
    for _ in range(100):
        rows, n = rng.randrange(1, 4), rng.randrange(1, 4)
        m = [[rng.randrange(16) for _ in range(n)] for _ in range(rows)]
        x0 = [rng.randrange(16) for _ in range(n)]
        b = [sum(r[j] * x0[j] for j in range(n)) % 16 for r in m]
        x = solve_mod(m, b, 4)
        assert x is not None
        assert all(sum(r[j] * x[j] for j in range(n)) % 16 == b[i] for i, r in enumerate(m))


def test_presentation_decompose_roundtrip():
    rng = random.Random(31)
    for _ in range(60):
        n = rng.randrange(1, 4)
        rows = [[rng.randrange(8) for _ in range(n)] for _ in range(n + 1)]
        rows += [[16 if i == j else 0 for j in range(n)] for i in range(n)]
        pres = GroupPresentation(n, rows, ETA)
        vec = [rng.randrange(1 << ETA) for _ in range(n)]
        coeffs, combo = pres.decompose(vec)
        mod = 1 << ETA
        recon = [0] * n
        for i, c in enumerate(coeffs):
            for j in range(n):
                recon[j] = (recon[j] + c * pres.gen_expr[i][j]) % mod
        for r, f in enumerate(combo):
            for j in range(n):
                recon[j] = (recon[j] + f * rows[r][j]) % mod
        assert recon == [x % mod for x in vec]


def test_integer_smith_invariants():
    assert smith_invariants_int([[2, 0], [0, 4]]) == [2, 4]
    assert smith_invariants_int([[2, 0], [0, 2], [1, 1]]) == [2]
    assert smith_invariants_int([[6, 0], [0, 10]]) == [2, 30]


def test_integer_kernel():
    m = [[2, 4], [1, 2]]
    ker = integer_kernel(m)
    assert len(ker) == 1
    x = ker[0]
    assert all(sum(x[i] * m[i][j] for i in range(2)) == 0 for j in range(2))


def test_group_type_helpers():
    t = AbelianGroupType([4, 2])
    assert t.orders == (2, 4)
    assert t.rank == 2 and t.order == 8
    assert t.render() == "[ 2,4 ]"
    assert AbelianGroupType([]).render() == "[ ]"
    assert AbelianGroupType([2]).is_subgroup_type_of(AbelianGroupType([4]))
    assert not AbelianGroupType([2, 2]).is_subgroup_type_of(AbelianGroupType([4]))
