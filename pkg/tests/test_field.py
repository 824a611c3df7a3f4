"""Digit arithmetic, residue linear algebra and coset enumeration."""

import numpy as np
import pytest

import oracles as orc
from lshape.field import (
    AffineSubspace,
    GroupVector,
    LinearMap,
    PrimeField,
    ResourceLimitError,
    add_map,
    digit_table,
    digits_of,
    dot,
    full_space,
    index_of,
    intersect_subspaces,
    modular_rref,
    scale_map,
    solve_mod,
    subspace_from_normals,
    vec_add,
    vec_neg,
    vec_scale,
    vec_sub,
)


def test_digit_round_trip():
    for p, m in [(3, 1), (3, 3), (5, 2), (7, 1)]:
        for i in range(p**m):
            d = digits_of(p, m, i)
            assert tuple(int(t) for t in d) == orc.digits_le(i, p, m)
            assert int(index_of(p, d)) == i


def test_digit_table_rows():
    dt = digit_table(3, 2)
    assert dt.shape == (9, 2)
    assert [tuple(int(t) for t in row) for row in dt] == [orc.digits_le(i, 3, 2) for i in range(9)]
    with pytest.raises(ValueError):
        dt[0, 0] = 5  # the table is shared and must stay read-only


def test_add_and_scale_maps():
    p, m = 3, 2
    for h in range(p**m):
        am = add_map(p, m, h)
        for x in range(p**m):
            assert int(am[x]) == orc.add_indices(x, h, p, m)
    for c in range(p):
        sm = scale_map(p, m, c)
        for x in range(p**m):
            assert int(sm[x]) == orc.scale_index(c, x, p, m)


def test_group_vector_algebra():
    a = GroupVector(5, (1, 4, 2))
    b = GroupVector(5, (3, 3, 0))
    assert vec_add(a, b).digits == (4, 2, 2)
    assert vec_sub(a, b).digits == (3, 1, 2)
    assert vec_neg(a).digits == (4, 1, 3)
    assert vec_scale(2, a).digits == (2, 3, 4)
    assert dot(a, b) == (1 * 3 + 4 * 3 + 2 * 0) % 5
    assert GroupVector.from_index(5, 3, a.index) == a
    assert GroupVector.zero(5, 3).is_zero()
    with pytest.raises(ValueError):
        GroupVector(3, (0, 3))
    with pytest.raises(ValueError):
        vec_add(a, GroupVector(3, (1, 2, 0)))


def test_prime_field_rejects_composites_and_two():
    PrimeField(7)
    for bad in (1, 2, 4, 6, 9, 15):
        with pytest.raises(ValueError):
            PrimeField(bad)
    with pytest.raises(ValueError):
        PrimeField(7, strict_mode=True)


def test_prime_field_half():
    for p in (3, 5, 7, 11):
        assert (2 * PrimeField(p).inv2) % p == 1


def test_modular_rref_properties():
    rng = np.random.default_rng(4)
    for p in (3, 5):
        for _ in range(30):
            mat = rng.integers(0, p, size=(3, 4))
            red, pivots = modular_rref(mat, p)
            assert len(pivots) == len(red)
            again, again_piv = modular_rref(red, p)
            assert np.array_equal(again, red)
            assert again_piv == pivots
            for i, c in enumerate(pivots):
                col = red[:, c]
                assert col[i] == 1 and np.count_nonzero(col) == 1


def test_solve_mod_against_enumeration():
    rng = np.random.default_rng(9)
    p = 3
    for _ in range(60):
        a = rng.integers(0, p, size=(2, 3))
        b = rng.integers(0, p, size=2)
        sol = solve_mod(a, b, p)
        brute = [
            x
            for x in range(p**3)
            if all(
                sum(int(a[r, i]) * d for i, d in enumerate(orc.digits_le(x, p, 3))) % p
                == int(b[r]) % p
                for r in range(2)
            )
        ]
        if sol is None:
            assert brute == []
        else:
            assert int(index_of(p, np.asarray(sol) % p)) in brute


def test_subspace_members_match_scan():
    cases = [
        (3, 3, [(1, 2, 0), (0, 1, 1)], [1, 2]),
        (3, 2, [(1, 1)], [0]),
        (5, 2, [(2, 3)], [4]),
        (3, 3, [], []),
    ]
    for p, m, normals, offsets in cases:
        sub = subspace_from_normals(p, m, normals, offsets)
        got = sorted(int(i) for i in sub.member_indices())
        want = orc.subspace_members_oracle(p, m, normals, offsets)
        assert got == want
        assert sub.cardinality == len(want)
        for x in range(p**m):
            assert sub.contains(x) == (x in want)


def test_subspace_reduces_redundant_rows():
    # the second row is twice the first, so only one constraint survives
    sub = subspace_from_normals(3, 2, [(1, 2), (2, 1)], [1, 2])
    assert sub.codimension == 1
    assert sub.cardinality == 3


def test_inconsistent_rows_give_empty_set():
    sub = subspace_from_normals(3, 2, [(1, 2), (2, 1)], [1, 0])
    assert sub.is_empty
    assert sub.cardinality == 0
    assert list(sub.member_indices()) == []
    assert not sub.contains(0)


def test_subspace_basis_spans_members():
    sub = subspace_from_normals(3, 3, [(1, 0, 2)], [2])
    base = sub.offset_point()
    span = set()
    bs = sub.basis()
    assert len(bs) == sub.dim
    for t0 in range(3):
        for t1 in range(3):
            v = vec_add(base, vec_add(vec_scale(t0, bs[0]), vec_scale(t1, bs[1])))
            span.add(v.index)
    assert span == set(int(i) for i in sub.member_indices())


def test_intersection_and_full_space():
    a = subspace_from_normals(3, 3, [(1, 0, 0)], [1])
    b = subspace_from_normals(3, 3, [(0, 1, 0)], [2])
    both = intersect_subspaces(a, b)
    want = orc.subspace_members_oracle(3, 3, [(1, 0, 0), (0, 1, 0)], [1, 2])
    assert sorted(int(i) for i in both.member_indices()) == want
    everything = full_space(3, 3)
    assert everything.dim == 3
    assert intersect_subspaces(everything, a).cardinality == a.cardinality


def test_linear_map_apply():
    lm = LinearMap.from_array(3, [[1, 2], [0, 1]])
    x = GroupVector(3, (2, 2))
    y = lm.apply(x)
    assert y.digits == ((1 * 2 + 2 * 2) % 3, (0 * 2 + 1 * 2) % 3)
    ident = LinearMap.identity(3, 2)
    assert ident.apply(x) == x


def test_enumeration_cap_raises():
    with pytest.raises(ResourceLimitError):
        subspace_from_normals(3, 20, [], []).member_indices()
