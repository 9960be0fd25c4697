"""Record ingestion, calm exclusion and monthly histograms."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from circbayes.cli.data import (
    bin_month,
    group_by_month,
    histogram_from_angles,
    ingest,
    monthly_column_mean,
    parse_timestamp,
)
from circbayes.errors import InputError

HERE = Path(__file__).parent
TWO_PI = 2 * math.pi


def write_csv(tmp_path, rows, header="timestamp,wind_dir_deg,wind_speed_kmh"):
    p = tmp_path / "in.csv"
    p.write_text(header + "\n" + "\n".join(rows) + "\n")
    return p


class TestIngest:
    def test_golden_fixture(self):
        res = ingest(HERE / "data" / "three_rows.csv")
        golden = json.loads((HERE / "golden" / "three_rows_records.json").read_text())
        assert res.accounting() == golden["accounting"]
        assert [r.to_dict() for r in res.records] == golden["records"]
        np.testing.assert_allclose([r.direction_rad for r in res.records], golden["direction_rad"], atol=1e-14)

    def test_accounting_sums_to_total(self, tmp_path):
        rows = [f"2020-01-01T{h:02d}:00:00,{h * 10},5" for h in range(20)]
        rows += ["2020-01-02T00:00:00,,3", "2020-01-02T01:00:00,90,0", "garbage"]
        res = ingest(write_csv(tmp_path, rows), malformed_threshold=0.1)
        acc = res.accounting()
        assert acc["retained"] + acc["calm_excluded"] + acc["malformed"] == acc["total_rows"] == 23
        assert acc["calm_excluded"] == 2 and acc["malformed"] == 1
        assert res.problems and "line 24" in res.problems[0]

    def test_malformed_threshold(self, tmp_path):
        rows = ["2020-01-01T00:00:00,10,5", "2020-01-01T01:00:00,400,5"]
        with pytest.raises(InputError, match="malformed"):
            ingest(write_csv(tmp_path, rows))

    @pytest.mark.parametrize("bad", ["x,10,5", "2020-01-01T00:00:00,abc,5", "2020-01-01T00:00:00,10,-1",
                                     "2020-01-01T00:00:00,-5,1", "2020-01-01T00:00:00,nan,1"])
    def test_malformed_rows_counted(self, tmp_path, bad):
        rows = [f"2020-01-01T{i % 24:02d}:{i // 24:02d}:00,10,5" for i in range(200)] + [bad]
        assert ingest(write_csv(tmp_path, rows)).malformed == 1

    def test_missing_column(self, tmp_path):
        with pytest.raises(InputError, match="wind_speed_kmh"):
            ingest(write_csv(tmp_path, ["2020-01-01T00:00:00,10"], header="timestamp,wind_dir_deg"))

    def test_custom_columns(self, tmp_path):
        p = write_csv(tmp_path, ["2020-01-01T00:00:00,10,5"], header="t,dir,spd")
        assert ingest(p, "t", "dir", "spd").retained == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="cannot open"):
            ingest(tmp_path / "nope.csv")

    def test_timestamp_with_zone(self):
        assert parse_timestamp("2021-03-01T02:00:00Z").utcoffset().total_seconds() == 0


class TestHistograms:
    def test_single_bin_stress(self):
        h = histogram_from_angles("2020-01", [0.05] * 50, 36)
        assert np.argmax(h.clr_values) == 0
        assert np.all(np.isfinite(h.clr_values))
        assert h.zero_bins == 35
        assert h.clr_curve.integral() == pytest.approx(0.0, abs=1e-10)

    def test_uniform_counts(self):
        angles = (np.arange(36) + 0.5) * TWO_PI / 36
        h = histogram_from_angles("2020-01", np.repeat(angles, 3), 36)
        np.testing.assert_allclose(h.clr_values, 0.0, atol=1e-14)
        np.testing.assert_allclose(h.rel_freq, 1 / 36)

    def test_bins_start_at_north(self):
        h = histogram_from_angles("m", [0.0, math.radians(9.9), math.radians(10.1)], 36)
        assert h.counts[0] == 2 and h.counts[1] == 1
        assert h.bin_edges[0] == 0.0 and h.bin_edges[-1] == pytest.approx(TWO_PI)

    def test_additive_pseudo_count(self):
        h = histogram_from_angles("m", [0.1, 0.1, 3.5], 4, pseudo_count=0.5)
        np.testing.assert_allclose(h.rel_freq, np.array([2.5, 0.5, 1.5, 0.5]) / 5)

    def test_multiplicative(self):
        h = histogram_from_angles("m", [0.1, 0.1, 3.5, 3.5], 4, "multiplicative", 0.5)
        delta = 0.5 / 4
        np.testing.assert_allclose(h.rel_freq, [0.5 * (1 - 2 * delta), delta, 0.5 * (1 - 2 * delta), delta])
        assert h.rel_freq.sum() == pytest.approx(1.0)

    def test_reject(self):
        with pytest.raises(InputError, match="empty bin"):
            histogram_from_angles("m", [0.1], 4, "reject")

    def test_empty_month(self):
        with pytest.raises(InputError, match="no directional"):
            bin_month([], "2020-01")

    def test_dict_roundtrip(self):
        from circbayes.cli.data import MonthlyHistogram

        h = histogram_from_angles("2020-02", [0.3, 1.0, 5.0], 8)
        g = MonthlyHistogram.from_dict(json.loads(json.dumps(h.to_dict())))
        np.testing.assert_array_equal(g.clr_values, h.clr_values)
        assert g.label == h.label


def test_grouping_and_column_means(tmp_path):
    rows = ["2020-01-05T00:00:00,10,4,1", "2020-01-06T00:00:00,20,6,3", "2020-02-01T00:00:00,30,10,5"]
    res = ingest(write_csv(tmp_path, rows, "timestamp,wind_dir_deg,wind_speed_kmh,p"))
    groups = group_by_month(res.records)
    assert list(groups) == ["2020-01", "2020-02"]
    assert bin_month(res.records, "2020-01").total == 2
    assert monthly_column_mean(res.records, "wind_speed_kmh") == {"2020-01": 5.0, "2020-02": 10.0}
    assert monthly_column_mean(res.records, "p") == {"2020-01": 2.0, "2020-02": 5.0}
    with pytest.raises(InputError, match="not present"):
        monthly_column_mean(res.records, "q")
