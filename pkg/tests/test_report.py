import os

import numpy as np
import pytest

from hedonic.diagnostics import correlation_from_columns
from hedonic.report import (
    correlation_csv,
    price_hist_csv,
    write_artifacts,
    write_atomic,
)
from hedonic.tabular import load_csv_text


class TestPriceHist:
    def test_counts_sum_per_scale(self):
        values = [float(v) for v in range(1, 101)]
        ds, _ = load_csv_text(price_hist_csv(values))
        scales = ds.column("scale").values
        counts = ds.column("count").values
        assert sum(c for s, c in zip(scales, counts) if s == "price") == 100
        assert sum(c for s, c in zip(scales, counts) if s == "log_price") == 100

    def test_constant_values_single_bin(self):
        ds, _ = load_csv_text(price_hist_csv([5.0, 5.0, 5.0]))
        rows = list(zip(ds.column("scale").values, ds.column("count").values))
        assert ("price", 3.0) in rows

    def test_nonpositive_values_only_in_raw_scale(self):
        text = price_hist_csv([-1.0, 2.0, 3.0])
        ds, _ = load_csv_text(text)
        scales = ds.column("scale").values
        counts = ds.column("count").values
        assert sum(c for s, c in zip(scales, counts) if s == "price") == 3
        assert sum(c for s, c in zip(scales, counts) if s == "log_price") == 2


class TestCorrelationCsv:
    def test_matrix_round_trips(self):
        X = np.column_stack([np.linspace(0, 1, 10), np.linspace(1, 0, 10) ** 2])
        cm = correlation_from_columns(("a", "b"), X)
        ds, _ = load_csv_text(correlation_csv(cm))
        assert ds.names == ("column", "a", "b")
        assert ds.column("a").values[0] == 1.0
        assert ds.column("b").values[1] == 1.0
        assert ds.column("b").values[0] == pytest.approx(float(cm.r[0, 1]))


class TestAtomicWrite:
    def test_creates_parents_and_replaces(self, tmp_path):
        target = tmp_path / "deep" / "nested" / "file.txt"
        write_atomic(target, "one")
        write_atomic(target, "two")
        assert target.read_text() == "two"
        assert [p for p in (tmp_path / "deep" / "nested").iterdir()] == [target]

    def test_write_artifacts_returns_paths(self, tmp_path):
        paths = write_artifacts(tmp_path, {"a.txt": "x", "sub/b.csv": "y\n"})
        assert sorted(os.path.basename(p) for p in paths) == ["a.txt", "b.csv"]
        assert (tmp_path / "sub" / "b.csv").read_text() == "y\n"
