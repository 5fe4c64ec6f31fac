import random

import pytest

from ppdfl.field import (
    DimensionMismatch,
    FieldElement,
    GfpMatrix,
    PrimeModulus,
    ZeroInverse,
    gfp_row_reduce,
    in_row_space,
    is_prime,
    mod_inverse,
    next_prime,
)


def brute_force_inverse(a, p):
    # independent oracle: exhaustive search over Z_p
    for x in range(1, p):
        if a * x % p == 1:
            return x
    raise AssertionError(f"{a} has no inverse mod {p}")


def test_primality_helpers():
    assert is_prime(2) and is_prime(11) and is_prime(1020431)
    assert not is_prime(1) and not is_prime(9) and not is_prime(2**20)
    assert next_prime(10) == 11
    assert next_prime(1020430) == 1020431


def test_modulus_validation():
    with pytest.raises(ValueError):
        PrimeModulus(10)
    with pytest.raises(ValueError):
        PrimeModulus(2**31 + 11)  # too wide, even if prime
    assert PrimeModulus(11).reduce(-3) == 8


def test_inverse_identity():
    p = PrimeModulus(11)
    assert mod_inverse(p.element(1)).value == 1


def test_inverse_examples_vs_exhaustive_search():
    p = PrimeModulus(11)
    assert mod_inverse(p.element(2)).value == brute_force_inverse(2, 11) == 6
    assert mod_inverse(p.element(10)).value == brute_force_inverse(10, 11) == 10
    assert 10 * 10 % 11 == 1


def test_inverse_of_zero_rejected():
    with pytest.raises(ZeroInverse):
        mod_inverse(PrimeModulus(11).element(0))


def test_inverse_property_random():
    rng = random.Random(11)
    for p in (11, 101, 65537, 1020431):
        pm = PrimeModulus(p)
        for _ in range(50):
            a = rng.randrange(1, p)
            assert (mod_inverse(pm.element(a)) * a).value == 1


def test_field_axioms_random():
    rng = random.Random(5)
    for p in (11, 1020431):
        pm = PrimeModulus(p)
        for _ in range(50):
            a, b, c = (pm.element(rng.randrange(p)) for _ in range(3))
            assert ((a + b) + c) == (a + (b + c))
            assert ((a * b) * c) == (a * (b * c))
            assert (a * (b + c)) == (a * b + a * c)
            assert (a + 0).value == a.value
            assert (a * 1).value == a.value
            assert (a + (-a)).value == 0


def test_field_element_reduces_and_divides():
    pm = PrimeModulus(11)
    assert FieldElement(-3, pm).value == 8
    assert (pm.element(5) / pm.element(2)).value == 5 * 6 % 11
    with pytest.raises(ValueError):
        pm.element(1) + PrimeModulus(13).element(1)


def test_row_reduce_identity():
    pm = PrimeModulus(11)
    m = GfpMatrix([[1, 0], [0, 1]], pm)
    reduced, rank, pivots = gfp_row_reduce(m)
    assert rank == 2
    assert pivots == (0, 1)
    assert reduced.data == [[1, 0], [0, 1]]


def test_row_reduce_dependent_rows():
    pm = PrimeModulus(11)
    _, rank, _ = gfp_row_reduce(GfpMatrix([[1, 2], [2, 4]], pm))
    assert rank == 1


def test_row_reduce_hand_elimination():
    # [[1,1,0],[0,1,1]] over GF(5): subtract row 2 from row 1
    pm = PrimeModulus(5)
    reduced, rank, pivots = gfp_row_reduce(GfpMatrix([[1, 1, 0], [0, 1, 1]], pm))
    assert rank == 2
    assert pivots == (0, 1)
    assert reduced.data == [[1, 0, 4], [0, 1, 1]]


def test_rank_invariant_under_row_shuffles():
    rng = random.Random(3)
    pm = PrimeModulus(11)
    for _ in range(20):
        rows = [[rng.randrange(11) for _ in range(4)] for _ in range(3)]
        _, rank, _ = gfp_row_reduce(GfpMatrix(rows, pm))
        shuffled = rows[:]
        rng.shuffle(shuffled)
        _, rank2, _ = gfp_row_reduce(GfpMatrix(shuffled, pm))
        assert rank == rank2


def test_row_space_membership():
    pm = PrimeModulus(5)
    m = GfpMatrix([[1, 1]], pm)
    assert in_row_space(m, [0, 0])
    assert in_row_space(m, [2, 2])
    assert not in_row_space(m, [1, 0])  # no scalar c with c*(1,1) == (1,0)


def test_row_space_dimension_mismatch():
    pm = PrimeModulus(5)
    with pytest.raises(DimensionMismatch):
        in_row_space(GfpMatrix([[1, 1]], pm), [1, 2, 3])


def test_row_space_invariant_under_row_operations():
    rng = random.Random(7)
    pm = PrimeModulus(11)
    for _ in range(20):
        rows = [[rng.randrange(11) for _ in range(5)] for _ in range(3)]
        m = GfpMatrix(rows, pm)
        # add a multiple of row 0 to row 1: row space unchanged
        f = rng.randrange(11)
        rows2 = [rows[0][:], [(a + f * b) % 11 for a, b in zip(rows[1], rows[0])],
                 rows[2][:]]
        m2 = GfpMatrix(rows2, pm)
        probe = [rng.randrange(11) for _ in range(5)]
        assert in_row_space(m, probe) == in_row_space(m2, probe)


def test_matrix_rejects_mixed_moduli():
    pm, pm2 = PrimeModulus(5), PrimeModulus(7)
    with pytest.raises(ValueError):
        GfpMatrix([[pm.element(1), pm2.element(1)]], pm)
    with pytest.raises(DimensionMismatch):
        GfpMatrix([[1, 2], [3]], pm)
    with pytest.raises(DimensionMismatch):
        GfpMatrix([], pm)
