import numpy as np
import pytest

from dpcrm import dataio
from dpcrm.diagnostics import PredictiveBands
from dpcrm.errors import ParseError, ValidationError
from dpcrm.inference import PosteriorSamples


class TestLoadCounts:
    def test_lines(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("3\n1\n2\n")
        ds = dataio.load_counts(p, "lines")
        assert ds.counts.counts.tolist() == [3, 2, 1]
        assert ds.counts.n == 6
        assert ds.provenance == "counts_file"

    def test_lines_crlf_and_blank(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_bytes(b"3\r\n\r\n1\r\n2\r\n")
        assert dataio.load_counts(p, "lines").counts.counts.tolist() == [3, 2, 1]

    def test_csv_duplicates_summed(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("item,count\na,2\nb,1\na,1\n")
        ds = dataio.load_counts(p, "csv")
        assert ds.counts.counts.tolist() == [3, 1]
        assert ds.counts.n == 4

    def test_zero_count_cites_line(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("3\n0\n2\n")
        with pytest.raises(ParseError) as err:
            dataio.load_counts(p, "lines")
        assert err.value.line == 2

    def test_non_integer_cites_line(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("item,count\na,2\nb,x\n")
        with pytest.raises(ParseError) as err:
            dataio.load_counts(p, "csv")
        assert err.value.line == 3

    def test_empty_file(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("")
        with pytest.raises(ValidationError):
            dataio.load_counts(p, "lines")

    def test_order_independence(self, tmp_path):
        p1 = tmp_path / "a.txt"
        p2 = tmp_path / "b.txt"
        p1.write_text("5\n2\n9\n2\n")
        p2.write_text("2\n9\n2\n5\n")
        a = dataio.load_counts(p1, "lines")
        b = dataio.load_counts(p2, "lines")
        assert a.counts.counts.tolist() == b.counts.counts.tolist()


class TestLoadEdgeList:
    def test_out_degrees(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("a b\na c\nb c\n")
        ds = dataio.load_edge_list(p)
        assert ds.counts.counts.tolist() == [2, 1]
        assert ds.counts.n == 3
        assert ds.provenance == "edge_list"

    def test_self_loop_counts(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("a a\na b\n")
        ds = dataio.load_edge_list(p)
        assert ds.counts.counts.tolist() == [2]

    def test_comments_skipped(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("# header\na b\n# more\nb a\n")
        assert dataio.load_edge_list(p).counts.n == 2

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("a b\na b c\n")
        with pytest.raises(ParseError) as err:
            dataio.load_edge_list(p)
        assert err.value.line == 2

    def test_empty(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("# nothing\n")
        with pytest.raises(ValidationError):
            dataio.load_edge_list(p)


class TestExports:
    def test_trace_roundtrip_full_precision(self, tmp_path, rng):
        draws = {"eta": rng.gamma(3.0, 100.0, size=50),
                 "sigma": rng.random(50), "tau": rng.gamma(2.0, 1.0, size=50),
                 "u": rng.gamma(5.0, 1.0, size=50)}
        samples = PosteriorSamples(family="gbfry", draws=draws,
                                   log_joint=rng.normal(size=50) * 1e5,
                                   iters=50, burnin=0, thin=1, seed=0)
        path = tmp_path / "trace.csv"
        dataio.export_trace(samples, path)
        cols = dataio.import_trace(path)
        for k in ("eta", "sigma", "tau", "u"):
            np.testing.assert_array_equal(cols[k], draws[k])
        np.testing.assert_array_equal(cols["log_joint"], samples.log_joint)

    def test_py_trace_schema(self, tmp_path, rng):
        draws = {"theta": rng.gamma(3.0, 1.0, size=10), "alpha": rng.random(10)}
        samples = PosteriorSamples(family="py", draws=draws,
                                   log_joint=np.zeros(10), iters=10, burnin=0,
                                   thin=1, seed=0)
        path = tmp_path / "trace.csv"
        dataio.export_trace(samples, path)
        with open(path) as fh:
            header = fh.readline().strip()
        assert header == "iter,theta,alpha,log_joint"

    def test_bands_row_count(self, tmp_path):
        bands = PredictiveBands(axis=np.array([1.0, 2.0, 3.0]),
                                lower=np.zeros(3), median=np.ones(3),
                                upper=np.full(3, 2.0), mode="rank")
        path = tmp_path / "bands.csv"
        dataio.export_bands(bands, path)
        rows = open(path).read().strip().splitlines()
        assert len(rows) == 1 + 3

    def test_summary_contains_seed(self, tmp_path):
        import json
        path = tmp_path / "summary.json"
        dataio.export_summary({"seed": 42, "nested": {"x": float("nan")}}, path)
        data = json.loads(open(path).read())
        assert data["seed"] == 42
        assert data["nested"]["x"] == "nan"
