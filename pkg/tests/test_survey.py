import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, make_record
from ztcm.errors import DataValidationError
from ztcm.survey import (
    DEFAULT_SCHEMA,
    DOMESTIC_ZONES,
    Dataset,
    Purpose,
    filter_tourists,
    parse_survey_csv,
    write_survey_csv,
    zonal_shares,
)

HEADER = ",".join(DEFAULT_SCHEMA.values())


def _write(tmp_path, lines, header=HEADER):
    p = tmp_path / "survey.csv"
    p.write_text("\n".join([header, *lines]) + "\n", encoding="utf-8")
    return p


def _row(rid, cost="1200", zone="Dhaka", kind="local", purpose="recreation"):
    return f"{rid},{kind},{zone},{cost},bus,0,1,{purpose},male,youth,graduate,married,student,4,20000,0"


class TestParse:
    def test_header_only(self, tmp_path):
        ds = parse_survey_csv(_write(tmp_path, []))
        assert len(ds) == 0 and ds.rejects == ()

    def test_negative_cost_rejected_not_fatal(self, tmp_path):
        ds = parse_survey_csv(_write(tmp_path, [_row("a"), _row("b", cost="-5"), _row("c")]))
        assert [r.respondent_id for r in ds] == ["a", "c"]
        assert len(ds.rejects) == 1
        assert ds.rejects[0].line == 3
        assert "travel_cost < 0" in ds.rejects[0].reason
        assert ds.row_count == 3

    def test_missing_mandatory_field_rejected(self, tmp_path):
        ds = parse_survey_csv(_write(tmp_path, [_row("a", cost=""), _row("b")]))
        assert len(ds) == 1 and ds.rejects[0].line == 2

    def test_optional_field_may_be_blank(self, tmp_path):
        line = "x,local,Khulna,10,boat,1,0,study,,,,,,,,"
        ds = parse_survey_csv(_write(tmp_path, [line]))
        assert ds.records[0].sex is None and ds.records[0].monthly_income is None

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_survey_csv(tmp_path / "nope.csv")

    def test_malformed_header(self, tmp_path):
        with pytest.raises(DataValidationError, match="travel_cost_bdt"):
            parse_survey_csv(_write(tmp_path, [], header=HEADER.replace("travel_cost_bdt", "cost")))

    def test_duplicate_id_fatal(self, tmp_path):
        with pytest.raises(DataValidationError, match="duplicate respondent_id 'a'"):
            parse_survey_csv(_write(tmp_path, [_row("a"), _row("a")]))

    def test_foreign_zone_mismatch_rejected(self, tmp_path):
        ds = parse_survey_csv(_write(tmp_path, [_row("a", zone="foreign", kind="local")]))
        assert len(ds) == 0 and len(ds.rejects) == 1

    def test_custom_schema_column_order(self, tmp_path):
        schema = {k: f"col_{k}" for k in DEFAULT_SCHEMA}
        ds0 = Dataset.from_records([make_record("a"), make_record("b", zone="foreign", cost=9e4)])
        path = tmp_path / "c.csv"
        write_survey_csv(ds0, path, schema)
        assert parse_survey_csv(path, schema).records == ds0.records

    def test_golden_local_share(self):
        ds = parse_survey_csv(GOLDEN / "survey.csv")
        assert len(ds) == 421
        assert len(ds.local) == 369
        assert round(100 * ds.local_share(), 1) == 87.6


class TestFilter:
    def test_all_recreation_is_identity(self):
        ds = Dataset.from_records([make_record(str(i)) for i in range(5)])
        assert filter_tourists(ds) == ds

    def test_1000_with_124_spiritual(self):
        recs = [make_record(str(i), purpose="spiritual" if i < 124 else "recreation") for i in range(1000)]
        assert len(filter_tourists(Dataset.from_records(recs))) == 876

    def test_reported_purpose_shares(self):
        # the published shares add to 101%; recreation takes the remainder
        mix = {"recreation": 831, "spiritual": 124, "study": 35, "business": 10}
        recs = [make_record(f"{p}{i}", purpose=p) for p, n in mix.items() for i in range(n)]
        kept = filter_tourists(Dataset.from_records(recs))
        assert round(100 * len(kept) / len(recs), 1) == 87.6

    def test_custom_keep(self):
        ds = Dataset.from_records([make_record("a"), make_record("b", purpose="study")])
        assert [r.respondent_id for r in filter_tourists(ds, keep=[Purpose.STUDY])] == ["b"]


class TestShares:
    def test_single_zone(self):
        ds = Dataset.from_records([make_record(str(i), zone="Sylhet") for i in range(3)])
        assert zonal_shares(ds) == {"Sylhet": 1.0}

    def test_reported_division_shares(self):
        counts = {"Dhaka": 152, "Khulna": 147, "Rajshahi": 25, "Chittagong": 23, "Rangpur": 11, "Barisal": 8, "Sylhet": 3}
        recs = [make_record(f"{z}{i}", zone=z) for z, n in counts.items() for i in range(n)]
        recs += [make_record(f"f{i}", zone="foreign") for i in range(52)]
        shares = zonal_shares(Dataset.from_records(recs))
        expected = {"Dhaka": 41.2, "Khulna": 39.8, "Rajshahi": 6.8, "Chittagong": 6.2, "Rangpur": 3.0, "Barisal": 2.2, "Sylhet": 0.8}
        assert {z: round(100 * s, 1) for z, s in shares.items()} == expected

    def test_two_zones_even(self):
        ds = Dataset.from_records([make_record("a", zone="Dhaka"), make_record("b", zone="Khulna")])
        assert zonal_shares(ds) == {"Dhaka": 0.5, "Khulna": 0.5}

    def test_no_local_records(self):
        with pytest.raises(ValueError):
            zonal_shares(Dataset.from_records([make_record("f", zone="foreign")]))


zone_st = st.sampled_from(DOMESTIC_ZONES + ("foreign",))
record_st = st.builds(
    lambda i, z, c, p, a, inc: make_record(f"r{i}", zone=z, cost=c, purpose=p, alone=a, monthly_income=inc),
    st.integers(0, 10**6),
    zone_st,
    st.floats(0, 1e6, allow_nan=False),
    st.sampled_from(["recreation", "spiritual", "study", "business"]),
    st.booleans(),
    st.one_of(st.none(), st.floats(0, 1e7, allow_nan=False)),
)
datasets = st.lists(record_st, max_size=40, unique_by=lambda r: r.respondent_id).map(Dataset.from_records)


class TestProperties:
    @given(ds=datasets)
    def test_shares_sum_to_one(self, ds):
        if not ds.local:
            return
        shares = zonal_shares(ds)
        assert abs(sum(shares.values()) - 1.0) <= 1e-12
        assert all(0.0 <= s <= 1.0 for s in shares.values())

    @given(ds=datasets)
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, ds, tmp_path_factory):
        path = tmp_path_factory.mktemp("rt") / "s.csv"
        write_survey_csv(ds, path)
        assert parse_survey_csv(path).records == ds.records

    @given(ds=datasets)
    def test_filter_idempotent(self, ds):
        once = filter_tourists(ds)
        assert filter_tourists(once) == once
