"""Configuration averages and the structured obstruction examples."""

import numpy as np
import pytest

import oracles as orc
from lshape.linforms import corner_point_system, lshape_point_system
from lshape.patterns import (
    balanced,
    corner_average,
    count_system,
    lshape_average,
    obstruction_example,
    ones_like,
    telescope_check,
)
from lshape.tables import FunctionTable, IndicatorSet


def _random_complex_tables(p, n, seed, count):
    rng = np.random.default_rng(seed)
    size = p ** (2 * n)
    out = []
    for _ in range(count):
        vals = 0.6 * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
        out.append(FunctionTable(p, 2 * n, vals, "complex"))
    return out


def _random_set(p, n, seed, density=0.4):
    rng = np.random.default_rng(seed)
    return IndicatorSet.from_mask(p, 2 * n, rng.random(p ** (2 * n)) < density)


def test_lshape_average_matches_oracle():
    for seed in range(5):
        fs = _random_complex_tables(3, 1, seed, 4)
        lib = lshape_average(*fs).average
        ref = orc.lshape_average_oracle(*[list(f.values) for f in fs], 3, 1)
        assert complex(lib) == pytest.approx(ref, abs=1e-12)


def test_lshape_counts_match_oracle():
    for p, n, seed in [(3, 1, 0), (3, 1, 1), (3, 2, 2)]:
        s = _random_set(p, n, seed)
        res = lshape_average(s.table, s.table, s.table, s.table)
        mask = [bool(b) for b in (s.table.values.real == 1.0)]
        total, nontrivial = orc.lshape_count_oracle(mask, p, n)
        assert res.exact_count == total
        assert res.nontrivial_count == nontrivial
        assert res.average == pytest.approx(total / p ** (3 * n))


def test_corner_counts_match_oracle():
    for seed in range(3):
        s = _random_set(3, 1, seed + 10)
        res = corner_average(s.table, s.table, s.table)
        mask = [bool(b) for b in (s.table.values.real == 1.0)]
        total, nontrivial = orc.corner_count_oracle(mask, 3, 1)
        assert res.exact_count == total
        assert res.nontrivial_count == nontrivial


def test_pattern_count_accessors():
    s = _random_set(3, 1, 3)
    res = lshape_average(s.table, s.table, s.table, s.table)
    assert res.abs_average == abs(res.average)
    assert res.real_average == res.average.real
    mixed = lshape_average(*_random_complex_tables(3, 1, 4, 4))
    assert mixed.exact_count is None


def test_empty_set_counts_zero():
    e = IndicatorSet.empty(3, 2)
    res = lshape_average(e.table, e.table, e.table, e.table)
    assert res.exact_count == 0
    assert res.nontrivial_count == 0
    assert res.average == 0


def test_full_set_counts_everything():
    # pair space with N = 3: every (x, y, z) triple hits, z = 0 gives N^2 of them
    f = IndicatorSet.full(3, 2).table
    res = lshape_average(f, f, f, f)
    assert res.exact_count == 3**3
    assert res.nontrivial_count == 3**3 - 3**2
    assert res.average == pytest.approx(1.0)


def test_ones_like_accepts_both():
    s = _random_set(3, 1, 7)
    for arg in (s, s.table):
        one = ones_like(arg)
        assert one.kind == "indicator"
        assert float(one.values.real.min()) == 1.0


def test_telescope_inequality():
    for seed in range(10):
        s = _random_set(3, 1, seed + 40, density=0.5)
        rep = telescope_check(s)
        assert rep["holds"]
        assert len(rep["terms"]) == 3


def test_balanced_decomposition_is_exact():
    # lam(S..S) - sigma^4 must equal the three-term telescoping sum exactly
    s = _random_set(3, 1, 99, density=0.6)
    st, sigma = s.table, s.density
    one = ones_like(s)
    g = balanced(s)
    lhs = lshape_average(st, st, st, st).average - sigma**4
    rhs = (
        lshape_average(g, st, st, st).average
        + sigma * lshape_average(one, g, st, st).average
        + sigma**2 * lshape_average(one, one, g, st).average
        + sigma**3 * complex(g.mean())
    )
    assert complex(lhs) == pytest.approx(complex(rhs), abs=1e-12)


def test_dot_obstruction_exact_values():
    ex = obstruction_example("dot", 3, 3)
    assert ex.set.cardinality == 261
    assert ex.predicted_density == pytest.approx(261 / 729)
    assert ex.set.density == pytest.approx(261 / 729)
    assert ex.predicted_count == 1215
    res = lshape_average(*[ex.set.table] * 4)
    assert res.exact_count == 1215
    assert res.nontrivial_count == 954
    with pytest.raises(ValueError):
        obstruction_example("dot", 3, 2)


def test_dot_obstruction_membership():
    ex = obstruction_example("dot", 3, 3)
    vals = ex.set.table.values.real
    for x in range(27):
        for y in range(27):
            dot = sum(
                a * b for a, b in zip(orc.digits_le(x, 3, 3), orc.digits_le(y, 3, 3))
            ) % 3
            assert (vals[x + 27 * y] == 1.0) == (dot == 0)


def test_random_phi_density_is_exact():
    for seed in range(6):
        ex = obstruction_example("random_phi", 3, 3, seed)
        assert ex.set.cardinality == 27 * 9  # every row is a genuine hyperplane
        assert ex.extras["resampled_rows"] >= 0


def test_coordinate_obstruction_membership():
    ex = obstruction_example("coordinate", 3, 2, 4)
    vals = ex.set.table.values.real
    assert ex.set.density == pytest.approx(1 / 3)
    for x in range(9):
        row = [y for y in range(9) if vals[x + 9 * y] == 1.0]
        digits0 = {orc.digits_le(y, 3, 2)[0] for y in row}
        assert len(digits0) == 1  # the first digit of y is pinned per x
        assert len(row) == 3


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        obstruction_example("mystery", 3, 3)


def test_count_system_agrees_with_direct_counters():
    s = _random_set(3, 1, 21)
    pair_tables = [s.table] * 4
    res = count_system(pair_tables, lshape_point_system(3), 1)
    direct = lshape_average(*pair_tables)
    assert res.exact_count == direct.exact_count
    res3 = count_system([s.table] * 3, corner_point_system(3), 1)
    direct3 = corner_average(*[s.table] * 3)
    assert res3.exact_count == direct3.exact_count
