import gzip
import io as stdio

import numpy as np
import pytest

from kmcoreset import (
    Coreset,
    ParseError,
    SparseVector,
    StreamFormat,
    WeightedSet,
    read_coreset,
    read_points,
    read_weighted_set,
    write_coreset,
    write_points,
)


def sv(dim, mapping):
    return SparseVector.from_pairs(dim, mapping)


def parse(text, fmt):
    return list(read_points(stdio.BytesIO(text.encode()), fmt))


PAIRS10 = StreamFormat("pairs", dim=10)


class TestPairs:
    def test_basic_line(self):
        (p, w), = parse("0:1.5 7:2.0\n", PAIRS10)
        assert w == 1.0
        assert p.indices.tolist() == [0, 7]
        assert p.values.tolist() == [1.5, 2.0]

    def test_weight_prefix(self):
        (p, w), = parse("w=3 2:1\n", PAIRS10)
        assert w == 3.0
        assert p.indices.tolist() == [2]

    def test_blank_and_comment_lines_skipped(self):
        rows = parse("# header\n\n0:1\n   \n# mid\n1:2\n", PAIRS10)
        assert len(rows) == 2

    def test_unsorted_input_accepted(self):
        (p, _), = parse("7:2 0:1\n", PAIRS10)
        assert p.indices.tolist() == [0, 7]

    def test_zero_entries_dropped(self):
        (p, _), = parse("0:1 3:0 5:0.0\n", PAIRS10)
        assert p.indices.tolist() == [0]

    def test_empty_vector_line(self):
        (p, w), = parse("w=2\n", PAIRS10)
        assert p.nnz == 0 and w == 2.0

    def test_one_based_indices(self):
        fmt = StreamFormat("pairs", dim=3, index_base=1)
        (p, _), = parse("1:5 3:7\n", fmt)
        assert p.indices.tolist() == [0, 2]
        with pytest.raises(ParseError):
            parse("0:5\n", fmt)

    @pytest.mark.parametrize("bad,lineno", [
        ("0:1\n0:1 0:2\n", 2),       # duplicate index
        ("0:1\n10:1\n", 2),          # out of range
        ("0:1\n-1:1\n", 2),          # below range
        ("junk\n", 1),               # no colon
        (":5\n", 1),                 # empty index
        ("3:\n", 1),                 # empty value
        ("a:5\n", 1),                # non-integer index
        ("3:x\n", 1),                # non-numeric value
        ("0:inf\n", 1),              # non-finite value
        ("0:nan\n", 1),
        ("w=0 0:1\n", 1),            # weight must be positive
        ("w=-2 0:1\n", 1),
        ("w=inf 0:1\n", 1),
        ("w=abc 0:1\n", 1),
    ])
    def test_errors_carry_line_numbers(self, bad, lineno):
        with pytest.raises(ParseError) as exc:
            parse(bad, PAIRS10)
        assert exc.value.line_no == lineno
        assert f"line {lineno}:" in str(exc.value)


class TestTriplets:
    FMT = StreamFormat("triplets", dim=5)

    def test_groups_consecutive_rows(self):
        rows = parse("0 0 1.0\n0 2 3.0\n1 4 -1.0\n7 0 2.0\n", self.FMT)
        assert len(rows) == 3
        assert rows[0][0].indices.tolist() == [0, 2]
        assert rows[1][0].indices.tolist() == [4]
        assert rows[2][0].values.tolist() == [2.0]
        assert all(w == 1.0 for _, w in rows)

    def test_token_count_enforced(self):
        with pytest.raises(ParseError) as exc:
            parse("0 1\n", self.FMT)
        assert exc.value.line_no == 1
        with pytest.raises(ParseError):
            parse("0 1 2 3\n", self.FMT)

    def test_bad_row_id(self):
        with pytest.raises(ParseError):
            parse("x 1 2\n", self.FMT)

    def test_duplicate_column_within_row(self):
        with pytest.raises(ParseError):
            parse("0 1 2\n0 1 3\n", self.FMT)


class TestDenseCsv:
    FMT = StreamFormat("dense_csv")

    def test_dim_inferred_and_zeros_dropped(self):
        rows = parse("1.0,0,2.5\n0,0,0\n", self.FMT)
        assert rows[0][0].dim == 3
        assert rows[0][0].indices.tolist() == [0, 2]
        assert rows[1][0].nnz == 0

    def test_explicit_dim_mismatch(self):
        with pytest.raises(ParseError) as exc:
            parse("1,2\n", StreamFormat("dense_csv", dim=3))
        assert exc.value.line_no == 1

    def test_inferred_dim_locked_by_first_row(self):
        with pytest.raises(ParseError) as exc:
            parse("1,2,3\n1,2\n", self.FMT)
        assert exc.value.line_no == 2

    def test_bad_cell(self):
        with pytest.raises(ParseError):
            parse("1,x,3\n", self.FMT)


class TestFormatValidation:
    def test_pairs_requires_dim(self):
        with pytest.raises(ValueError):
            StreamFormat("pairs")
        with pytest.raises(ValueError):
            StreamFormat("triplets")
        StreamFormat("dense_csv")  # dim optional here

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            StreamFormat("parquet", dim=3)

    def test_index_base(self):
        with pytest.raises(ValueError):
            StreamFormat("pairs", dim=3, index_base=2)


class TestRoundTrips:
    def test_points_bit_identity(self, tmp_path):
        rng = np.random.default_rng(90)
        pts = []
        for _ in range(1000):
            nnz = rng.integers(0, 5)
            idx = rng.choice(50, size=nnz, replace=False)
            scale = 10.0 ** float(rng.integers(-8, 9))
            pts.append((sv(50, {int(j): float(v) for j, v in
                                zip(idx, rng.standard_normal(nnz) * scale)}),
                        float(rng.uniform(0.1, 5.0))))
        path = tmp_path / "pts.txt"
        write_points(pts, path)
        back = list(read_points(path, StreamFormat("pairs", dim=50)))
        assert len(back) == 1000
        for (p, w), (q, v) in zip(pts, back):
            assert w == v
            assert p == q

    def test_unit_weight_not_written(self, tmp_path):
        path = tmp_path / "p.txt"
        write_points([(sv(3, {0: 1.0}), 1.0)], path)
        assert path.read_text() == "0:1.0\n"

    def test_gzip_round_trip_without_gz_suffix(self, tmp_path):
        # reader must sniff the magic bytes, not trust the name
        path = tmp_path / "data.dat"
        write_points([(sv(3, {1: 2.0}), 3.0)], path, compress=True)
        assert path.read_bytes()[:2] == b"\x1f\x8b"
        (p, w), = read_points(path, StreamFormat("pairs", dim=3))
        assert w == 3.0 and p.indices.tolist() == [1]

    def test_gz_suffix_compresses_by_default(self, tmp_path):
        path = tmp_path / "data.txt.gz"
        write_points([(sv(3, {1: 2.0}), 1.0)], path)
        with gzip.open(path, "rt") as f:
            assert f.read() == "1:2.0\n"

    def test_read_weighted_set(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("w=2 0:1\n1:3\n")
        P = read_weighted_set(path, StreamFormat("pairs", dim=2), additive=0.5)
        assert P.n == 2
        assert P.weights.tolist() == [2.0, 1.0]
        assert P.additive == 0.5

    def test_read_weighted_set_empty_is_error(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("# nothing\n")
        with pytest.raises(ParseError) as exc:
            read_weighted_set(path, StreamFormat("pairs", dim=2))
        assert exc.value.line_no == 0


class TestCoresetFiles:
    def _coreset(self, provenance):
        base = WeightedSet([sv(4, {0: 0.1, 3: -2.0}), SparseVector.zero(4)],
                           [2.5, 1.0], additive=1.0 / 3.0)
        return Coreset(base, epsilon=0.1, built_for_k=2, provenance=provenance)

    def test_header_fields_verbatim(self, tmp_path):
        path = tmp_path / "c.txt"
        write_coreset(self._coreset(None), path)
        head = path.read_text().splitlines()[0]
        assert head == ("#coreset v1 dim=4 count=2 additive=0.3333333333333333 "
                        "epsilon=0.1 built_for_k=2")

    def test_round_trip_without_provenance(self, tmp_path):
        S = self._coreset(None)
        path = tmp_path / "c.txt"
        write_coreset(S, path)
        R = read_coreset(path)
        assert R.epsilon == 0.1 and R.built_for_k == 2
        assert R.base.additive == S.base.additive  # full precision
        assert R.base.weights.tolist() == [2.5, 1.0]
        assert R.base.points[0] == S.base.points[0]
        assert R.base.points[1].nnz == 0
        assert R.provenance is None

    def test_round_trip_with_provenance(self, tmp_path):
        prov = (((3, 0.25), (7, 0.75)), ((1, 1.0),))
        S = self._coreset(prov)
        path = tmp_path / "c.txt"
        write_coreset(S, path)
        assert read_coreset(path).provenance == prov

    def test_zero_nnz_point_line(self, tmp_path):
        path = tmp_path / "c.txt"
        write_coreset(self._coreset(None), path)
        lines = path.read_text().splitlines()
        assert lines[2] == "w=1.0"

    def test_none_labels_round_trip(self, tmp_path):
        base = WeightedSet([sv(2, {0: 1.0})])
        path = tmp_path / "c.txt"
        write_coreset(Coreset(base), path)
        R = read_coreset(path)
        assert R.epsilon is None and R.built_for_k is None

    def test_gzip_coreset(self, tmp_path):
        path = tmp_path / "c.gz"
        write_coreset(self._coreset(None), path)
        assert read_coreset(path).base.weights.tolist() == [2.5, 1.0]

    @pytest.mark.parametrize("text,msg", [
        ("0:1\n", "header"),
        ("#coreset v2 dim=2\n", "header"),
        ("#coreset v1 dim=2 count=1 additive=0.0 epsilon=none\n", "missing field"),
        ("#coreset v1 dim=x count=1 additive=0.0 epsilon=none built_for_k=none\n",
         "malformed header value"),
    ])
    def test_bad_headers(self, tmp_path, text, msg):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        with pytest.raises(ParseError) as exc:
            read_coreset(path)
        assert msg in str(exc.value)

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("#coreset v1 dim=2 count=2 additive=0.0 "
                        "epsilon=none built_for_k=none\nw=1.0 0:1\n")
        with pytest.raises(ParseError):
            read_coreset(path)

    def test_point_line_requires_weight(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("#coreset v1 dim=2 count=1 additive=0.0 "
                        "epsilon=none built_for_k=none\n0:1\n")
        with pytest.raises(ParseError) as exc:
            read_coreset(path)
        assert exc.value.line_no == 2

    def test_provenance_row_order_enforced(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("#coreset v1 dim=2 count=1 additive=0.0 "
                        "epsilon=none built_for_k=none\nw=1.0 0:1\n"
                        "#provenance\n#p 1 0:1.0\n")
        with pytest.raises(ParseError) as exc:
            read_coreset(path)
        assert "out of order" in str(exc.value)

    def test_provenance_row_outside_block(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("#coreset v1 dim=2 count=1 additive=0.0 "
                        "epsilon=none built_for_k=none\n#p 0 0:1.0\nw=1.0 0:1\n")
        with pytest.raises(ParseError):
            read_coreset(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(ParseError):
            read_coreset(path)

    def test_stream_source(self):
        S = self._coreset(None)
        buf = stdio.StringIO()
        write_coreset(S, buf)
        back = read_coreset(stdio.BytesIO(buf.getvalue().encode()))
        assert back.base.weights.tolist() == [2.5, 1.0]
