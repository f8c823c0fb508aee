import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import PUBLISHED
from ztcm.profiling import (
    ContingencyTable,
    GroupSummary,
    chi_square_independence,
    contingency_from_records,
    contingency_from_shares,
    one_way_anova,
    one_way_anova_raw,
    parse_profile_blocks,
)

SIZES = {"foreign": 52, "local": 369}


def _table(counts):
    counts = np.asarray(counts, dtype=float)
    r, c = counts.shape
    return ContingencyTable(tuple(f"r{i}" for i in range(r)), tuple(f"c{j}" for j in range(c)), counts)


class TestContingencyFromShares:
    def test_sex_cells_real_valued(self):
        t = contingency_from_shares(SIZES, {"foreign": [30.8, 69.2], "local": [10.0, 90.0]}, ["female", "male"])
        np.testing.assert_allclose(t.counts, [[16.016, 36.9], [35.984, 332.1]], atol=1e-9)
        assert np.round(t.counts, 1).tolist() == [[16.0, 36.9], [36.0, 332.1]]

    def test_integer_counts(self):
        t = contingency_from_shares(SIZES, {"foreign": [30.8, 69.2], "local": [10.0, 90.0]}, ["f", "m"], integer_counts=True)
        assert t.counts.tolist() == [[16, 37], [36, 332]]

    def test_uniform(self):
        t = contingency_from_shares({"a": 10, "b": 10}, {"a": [50, 50], "b": [50, 50]}, ["x", "y"])
        assert t.counts.tolist() == [[5, 5], [5, 5]]

    def test_single_group_rejected(self):
        with pytest.raises(ValueError):
            contingency_from_shares({"a": 100}, {"a": [100]}, ["x"])

    def test_sum_tolerance(self):
        with pytest.raises(ValueError, match="sum to"):
            contingency_from_shares(SIZES, {"foreign": [30.0, 69.0], "local": [10.0, 90.0]}, ["f", "m"])
        contingency_from_shares(SIZES, {"foreign": [30.8, 69.6], "local": [10.0, 90.0]}, ["f", "m"])

    def test_table_invariants(self):
        with pytest.raises(ValueError):
            _table([[1, 2]])
        with pytest.raises(ValueError):
            _table([[1, -1], [2, 3]])
        with pytest.raises(ValueError):
            _table([[0, 0], [0, 0]])


class TestChiSquare:
    def test_sex_table(self):
        t = contingency_from_shares(SIZES, {"foreign": [30.8, 69.2], "local": [10.0, 90.0]}, ["f", "m"], integer_counts=True)
        r = chi_square_independence(t)
        assert r.statistic == pytest.approx(17.82, abs=0.10)
        assert r.df == (1,)
        assert r.p <= 0.0001

    def test_repeat_table(self):
        t = contingency_from_shares(SIZES, {"foreign": [5.8, 94.2], "local": [20.6, 79.4]}, ["yes", "no"], integer_counts=True)
        r = chi_square_independence(t)
        assert r.statistic == pytest.approx(6.57, abs=0.10)
        assert r.p == pytest.approx(0.01, abs=0.005)

    def test_independent_table(self):
        r = chi_square_independence(_table(np.outer([1, 2, 3], [4, 5])))
        assert r.statistic == pytest.approx(0.0, abs=1e-12)
        assert r.p == pytest.approx(1.0)

    def test_zero_margin(self):
        with pytest.raises(ValueError, match="margin"):
            chi_square_independence(_table([[0, 0], [3, 4]]))

    def test_from_records(self):
        t = contingency_from_records(["m", "f", "m", None, "f"], ["L", "L", "F", "F", None])
        assert t.row_labels == ("f", "m") and t.col_labels == ("F", "L")
        assert t.counts.tolist() == [[0, 1], [1, 1]]

    positive = arrays(np.float64, st.tuples(st.integers(2, 5), st.integers(2, 5)), elements=st.floats(0.5, 500))

    @given(counts=positive, data=st.data())
    def test_permutation_invariance(self, counts, data):
        rp = data.draw(st.permutations(range(counts.shape[0])))
        cp = data.draw(st.permutations(range(counts.shape[1])))
        a = chi_square_independence(_table(counts)).statistic
        b = chi_square_independence(_table(counts[np.ix_(rp, cp)])).statistic
        assert b == pytest.approx(a, rel=1e-9, abs=1e-9)

    @given(counts=positive, c=st.floats(0.01, 100))
    def test_scaling(self, counts, c):
        a = chi_square_independence(_table(counts)).statistic
        b = chi_square_independence(_table(counts * c)).statistic
        assert b == pytest.approx(c * a, rel=1e-9, abs=1e-9)

    @given(counts=arrays(np.float64, (2, 2), elements=st.floats(1, 1000)))
    def test_two_by_two_is_z_squared(self, counts):
        n1, n2 = counts.sum(axis=0)
        p1, p2 = counts[0, 0] / n1, counts[0, 1] / n2
        pooled = counts[0].sum() / (n1 + n2)
        z = (p1 - p2) / math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
        assert chi_square_independence(_table(counts)).statistic == pytest.approx(z * z, rel=1e-9, abs=1e-9)


class TestAnova:
    def test_identical_groups(self):
        r = one_way_anova(GroupSummary(("a", "b"), (5, 7), (3.0, 3.0), (1.0, 1.0)))
        assert r.statistic == 0.0 and r.p == 1.0

    def test_hand_example(self):
        r = one_way_anova(GroupSummary(("a", "b"), (3, 3), (2.0, 5.0), (1.0, 1.0)))
        assert r.statistic == pytest.approx(13.5)
        assert r.p == pytest.approx(0.0213, abs=0.001)
        assert r.details["ssb"] == pytest.approx(13.5) and r.details["ssw"] == pytest.approx(4.0)

    def test_household_size(self):
        r = one_way_anova(GroupSummary(("local", "foreign"), (369, 52), (4.83, 2.21), (2.45, 1.40)))
        assert r.df[0] == 1
        assert r.statistic == pytest.approx(56.8, abs=0.1)
        assert abs(r.statistic - 51.44) / 51.44 < 0.15

    def test_zero_within_variance(self):
        r = one_way_anova(GroupSummary(("a", "b"), (3, 3), (1.0, 2.0), (0.0, 0.0)))
        assert math.isinf(r.statistic) and r.p == 0.0 and r.degenerate

    def test_summary_validation(self):
        with pytest.raises(ValueError):
            GroupSummary(("a",), (3,), (1.0,), (1.0,))
        with pytest.raises(ValueError):
            GroupSummary(("a", "b"), (1, 3), (1.0, 1.0), (1.0, 1.0))

    @given(
        ns=st.lists(st.integers(2, 40), min_size=2, max_size=5),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_summary_matches_raw(self, ns, seed):
        rng = np.random.default_rng(seed)
        means = rng.normal(0, 5, len(ns))
        sds = rng.uniform(0.1, 3, len(ns))
        samples = {}
        for i, n in enumerate(ns):
            z = rng.normal(size=n)
            z = (z - z.mean()) / z.std(ddof=1)
            samples[f"g{i}"] = means[i] + sds[i] * z
        raw = one_way_anova_raw(samples)
        summ = one_way_anova(GroupSummary(tuple(samples), tuple(ns), tuple(means), tuple(sds)))
        assert raw.statistic == pytest.approx(summ.statistic, rel=1e-9)
        assert raw.p == pytest.approx(summ.p, rel=1e-9, abs=1e-15)


class TestBlocks:
    def test_fixture_blocks(self):
        blocks = {b.name: b for b in parse_profile_blocks((PUBLISHED / "table2_profile.txt").read_text())}
        assert blocks["sex"].run().statistic == pytest.approx(17.82, abs=0.10)
        assert blocks["repeat_visit"].run().statistic == pytest.approx(6.57, abs=0.10)
        assert blocks["age"].run().df == (2,)
        assert blocks["household_size"].run().df == (1, 419)

    def test_counts_block(self):
        (b,) = parse_profile_blocks("[table t]\ncat,a,b\nx,10,20\ny,30,40\n")
        assert b.table.counts.tolist() == [[10, 20], [30, 40]]

    def test_errors(self):
        with pytest.raises(ValueError, match="before the first"):
            parse_profile_blocks("cat,a\n")
        with pytest.raises(ValueError, match="no data"):
            parse_profile_blocks("[table t]\ncat,a,b\n")
        with pytest.raises(ValueError, match="header"):
            parse_profile_blocks("[anova h]\nx,y\na,1,2\n")
