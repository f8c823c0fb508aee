import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import PUBLISHED
from ztcm.geometry import build_spot_table, read_spots_csv
from ztcm.valuation import (
    DemandSlope,
    allocate_spot_values,
    build_valuation_report,
    choke_price,
    convert_currency,
    demand_curve_points,
    mean_cs_per_visit,
    total_wtp,
    value_per_hectare,
    value_zone,
    zone_consumer_surplus,
)

TABLE4_TWTP_M = [60.3, 167.9, 980.8, 2590.5, 225.7, 77.7, 41.9]


def trapezoid_cs(tc, visits, b, steps=1_000_000):
    """Area under the linear demand q(p) = visits - b (p - tc) between tc and the choke price."""
    p = np.linspace(tc, tc + visits / b, steps + 1)
    q = visits - b * (p - tc)
    return float(np.sum((q[1:] + q[:-1]) * np.diff(p)) / 2)


class TestChokeAndSurplus:
    def test_zero_visits(self):
        assert choke_price(500.0, 0.0, 1e-3) == 500.0
        assert zone_consumer_surplus(500.0, 0.0, 1e-3) == 0.0

    def test_published_zones(self):
        assert choke_price(11_699.2, 102.0, 1.6e-4) == pytest.approx(649_199.2)
        assert choke_price(11_699.2, 102.0, 1.6e-4) == pytest.approx(648_468.8, rel=0.0015)
        assert choke_price(13_203.4, 19.3, 1.6e-4) == pytest.approx(133_787.4, rel=0.0005)

    def test_closed_form(self):
        assert zone_consumer_surplus(0.0, 10.0, 0.001) == pytest.approx(50_000.0)

    def test_slope_validation(self):
        with pytest.raises(ValueError):
            DemandSlope(0.0)
        with pytest.raises(ValueError):
            choke_price(1.0, 1.0, -1.0)
        with pytest.raises(ValueError):
            DemandSlope.from_coefficient(0.2)
        assert DemandSlope.from_coefficient(-0.2).b == 0.2
        with pytest.raises(ValueError):
            zone_consumer_surplus(1.0, -1.0, 1.0)

    def test_trapezoid_oracle_1000_draws(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            tc, v, b = rng.uniform(0, 2e5), rng.uniform(0.01, 1e3), 10 ** rng.uniform(-6, 0)
            assert zone_consumer_surplus(tc, v, b) == pytest.approx(trapezoid_cs(tc, v, b, 10_000), rel=1e-9)

    @pytest.mark.parametrize("tc, v, b", [(11_699.2, 102.0, 1.6e-4), (3.0, 0.5, 2.0)])
    def test_trapezoid_million_steps(self, tc, v, b):
        assert zone_consumer_surplus(tc, v, b) == pytest.approx(trapezoid_cs(tc, v, b), rel=1e-9)

    @given(tc=st.floats(0, 1e6), v=st.floats(0, 1e4), b=st.floats(1e-6, 10), c=st.floats(0.01, 100))
    def test_identities(self, tc, v, b, c):
        choke = choke_price(tc, v, b)
        cs = zone_consumer_surplus(tc, v, b)
        assert choke - tc == pytest.approx(v / b, rel=1e-9, abs=1e-6)
        assert cs == pytest.approx(0.5 * v * (choke - tc), rel=1e-9, abs=1e-9)
        assert choke >= tc and cs >= 0
        assert zone_consumer_surplus(tc, c * v, b) == pytest.approx(c * c * cs, rel=1e-9, abs=1e-9)


class TestAggregates:
    def test_total_wtp(self):
        assert total_wtp([12.5]) == 12.5
        assert total_wtp(TABLE4_TWTP_M) == pytest.approx(4144.8, abs=1e-9)
        # 4144.8 - 4144.7 is 0.1 only up to binary rounding
        assert round(abs(total_wtp(TABLE4_TWTP_M) - 4144.7), 9) <= 0.1
        assert total_wtp(TABLE4_TWTP_M[::-1]) == total_wtp(TABLE4_TWTP_M)
        with pytest.raises(ValueError):
            total_wtp([])

    def test_mean_cs(self):
        assert mean_cs_per_visit(100, 4) == 25
        assert mean_cs_per_visit(4144.7e6, 92_104) == pytest.approx(45_000, rel=0.01)
        assert convert_currency(45_000) == pytest.approx(577, abs=1)
        with pytest.raises(ValueError):
            mean_cs_per_visit(1.0, 0)

    def test_per_hectare(self):
        assert value_per_hectare(4144.7e6, 50_618.9) == pytest.approx(81_880, abs=1)
        assert convert_currency(81_880.3) == pytest.approx(1_049.75, abs=0.01)
        assert value_per_hectare(0.0, 10.0) == 0.0
        with pytest.raises(ValueError):
            value_per_hectare(1.0, 0.0)

    def test_currency(self):
        assert convert_currency(0.0) == 0.0
        assert convert_currency(4144.7e6, 78.0) == pytest.approx(53.14e6, abs=0.01e6)
        assert convert_currency(9_158, 78.0) == pytest.approx(117.42, abs=0.02)
        for rate in (0.0, -78.0):
            with pytest.raises(ValueError):
                convert_currency(1.0, rate)

    @given(x=st.floats(-1e12, 1e12), rate=st.floats(1e-3, 1e4))
    def test_currency_round_trip(self, x, rate):
        assert convert_currency(x, rate) * rate == pytest.approx(x, rel=1e-12, abs=1e-300)


class TestSpotAllocation:
    def test_table5(self):
        table = build_spot_table(read_spots_csv(PUBLISHED / "table1_spots.csv"))
        values = allocate_spot_values(53.1, list(table.spots))
        assert values[0] == pytest.approx(5.93, abs=0.01)
        assert values[-1] == pytest.approx(37.08, abs=0.01)
        assert sum(values) == pytest.approx(53.1, rel=1e-9)

    def test_single_and_errors(self):
        assert allocate_spot_values(7.0, [3.0]) == [7.0]
        with pytest.raises(ValueError):
            allocate_spot_values(1.0, [])
        with pytest.raises(ValueError):
            allocate_spot_values(1.0, [1.0, 0.0])

    @given(areas=st.lists(st.floats(0.1, 1e5), min_size=1, max_size=10), total=st.floats(0, 1e9), data=st.data())
    def test_total_and_permutation(self, areas, total, data):
        perm = data.draw(st.permutations(range(len(areas))))
        values = allocate_spot_values(total, areas)
        assert sum(values) == pytest.approx(total, rel=1e-9, abs=1e-9)
        permuted = allocate_spot_values(total, [areas[i] for i in perm])
        assert permuted == pytest.approx([values[i] for i in perm], rel=1e-12, abs=1e-12)


class TestReport:
    ZONES = [("A", 100.0, 10.0), ("B", 200.0, 0.0), ("C", 50.0, 4.0)]

    def test_report_consistency(self):
        r = build_valuation_report(self.ZONES, 0.01, exchange_rate=80.0, area_ha=2.0)
        assert r.total_value_bdt == pytest.approx(sum(z.twtp for z in r.zones), rel=1e-6)
        assert r.total_value_usd * 80.0 == pytest.approx(r.total_value_bdt, rel=1e-9)
        assert r.mean_cs_per_visit_usd * 80.0 == pytest.approx(r.mean_cs_per_visit_bdt, rel=1e-9)
        assert r.value_per_ha_usd * 80.0 == pytest.approx(r.value_per_ha_bdt, rel=1e-9)
        assert r.total_visits == 14.0
        assert r.summary()["zero_visit_zones"] == ["B"]

    def test_zone_slopes_override(self):
        r = build_valuation_report(self.ZONES, 0.01, zone_slopes={"A": 0.02})
        assert r.zones[0].choke_price == pytest.approx(100 + 10 / 0.02)
        assert r.zones[2].choke_price == pytest.approx(50 + 4 / 0.01)

    def test_value_zone_fields(self):
        z = value_zone("Z", 10.0, 2.0, 0.5)
        assert (z.choke_price, z.consumer_surplus, z.twtp, z.zero_visits) == (14.0, 4.0, 4.0, False)

    def test_demand_curve(self):
        pts = demand_curve_points(100.0, 10.0, 0.5, steps=100)
        assert len(pts) == 101
        assert pts[0] == (100.0, 10.0)
        assert pts[-1] == (120.0, 0.0)
        assert all(q1 >= q2 for (_, q1), (_, q2) in zip(pts, pts[1:]))
