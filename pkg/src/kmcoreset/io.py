"""Text formats for sparse point streams and coreset files.

Three ingest formats:

  pairs      one line per point: optional leading ``w=<weight>`` token, then
             whitespace-separated ``index:value`` tokens
  triplets   ``row col val`` lines; consecutive lines sharing a row id form
             one point (weight 1)
  dense_csv  one comma-separated dense row per point; zeros dropped

Indices may be 0- or 1-based on disk (``index_base``); in memory everything
is 0-based. Readers are line-at-a-time, so memory stays proportional to one
point's nonzeros, and they see through gzip by sniffing the two magic bytes
rather than trusting the file name.

Floats are written as ``repr(float(v))``, the shortest text that parses back
to the identical binary value, so write-then-read is exact.
"""

from __future__ import annotations

import gzip
import io as _io
import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional, Union

import numpy as np

from .coreset import Coreset
from .sparse_core import SparseVector, WeightedSet

FORMAT_KINDS = ("pairs", "triplets", "dense_csv")

Source = Union[str, os.PathLike, IO[bytes]]


class ParseError(ValueError):
    """Malformed input; carries the 1-based source line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class StreamFormat:
    kind: str
    dim: Optional[int] = None
    index_base: int = 0

    def __post_init__(self):
        if self.kind not in FORMAT_KINDS:
            raise ValueError(f"unknown format kind {self.kind!r}")
        if self.kind in ("pairs", "triplets") and self.dim is None:
            raise ValueError(f"{self.kind} format requires dim")
        if self.dim is not None and self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.index_base not in (0, 1):
            raise ValueError("index_base must be 0 or 1")


def _ftext(v: float) -> str:
    # repr of the builtin float; numpy scalar reprs carry the type name
    return repr(float(v))


def _open_text(source: Source):
    """Binary source -> (text stream, owns_handle). Sniffs gzip magic."""
    if isinstance(source, (str, os.PathLike)):
        raw: IO[bytes] = open(source, "rb")
        own = True
    else:
        raw, own = source, False
    buf = raw if isinstance(raw, _io.BufferedReader) else _io.BufferedReader(raw)  # type: ignore[arg-type]
    if buf.peek(2)[:2] == b"\x1f\x8b":
        text = _io.TextIOWrapper(gzip.GzipFile(fileobj=buf), encoding="utf-8")
    else:
        text = _io.TextIOWrapper(buf, encoding="utf-8")
    return text, own


def _open_write(sink, compress: bool | None = None):
    if isinstance(sink, (str, os.PathLike)):
        if compress is None:
            compress = str(sink).endswith(".gz")
        if compress:
            return gzip.open(sink, "wt", encoding="utf-8", newline="\n"), True
        return open(sink, "w", encoding="utf-8", newline="\n"), True
    return sink, False


def _parse_weight(tok: str, line_no: int) -> float:
    try:
        w = float(tok[2:])
    except ValueError:
        raise ParseError(line_no, f"bad weight token {tok!r}") from None
    if not math.isfinite(w) or w <= 0.0:
        raise ParseError(line_no, f"weight must be finite and positive, got {tok!r}")
    return w


def _parse_entry(tok: str, line_no: int, dim: int, base: int) -> tuple[int, float]:
    head, sep, tail = tok.partition(":")
    if not sep or not head or not tail:
        raise ParseError(line_no, f"malformed index:value token {tok!r}")
    try:
        j = int(head)
        v = float(tail)
    except ValueError:
        raise ParseError(line_no, f"malformed index:value token {tok!r}") from None
    j -= base
    if j < 0 or j >= dim:
        raise ParseError(line_no, f"index {head} out of range for dim {dim}")
    if not math.isfinite(v):
        raise ParseError(line_no, f"non-finite value in token {tok!r}")
    return j, v


def _build_vector(entries: list[tuple[int, float]], dim: int,
                  line_no: int) -> SparseVector:
    entries = [(j, v) for j, v in entries if v != 0.0]
    if not entries:
        return SparseVector.zero(dim)
    entries.sort()
    for a, b in zip(entries, entries[1:]):
        if a[0] == b[0]:
            raise ParseError(line_no, f"duplicate index {a[0]}")
    idx = np.array([j for j, _ in entries], dtype=np.int64)
    val = np.array([v for _, v in entries], dtype=np.float64)
    return SparseVector(dim, idx, val)


def _read_pairs(text, fmt: StreamFormat) -> Iterator[tuple[SparseVector, float]]:
    dim = fmt.dim
    for line_no, line in enumerate(text, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        w = 1.0
        if toks and toks[0].startswith("w="):
            w = _parse_weight(toks[0], line_no)
            toks = toks[1:]
        entries = [_parse_entry(t, line_no, dim, fmt.index_base) for t in toks]
        yield _build_vector(entries, dim, line_no), w


def _read_triplets(text, fmt: StreamFormat) -> Iterator[tuple[SparseVector, float]]:
    dim = fmt.dim
    cur_row: Optional[int] = None
    entries: list[tuple[int, float]] = []
    last_no = 0
    for line_no, line in enumerate(text, start=1):
        last_no = line_no
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) != 3:
            raise ParseError(line_no, f"expected 'row col val', got {line!r}")
        try:
            row = int(toks[0])
        except ValueError:
            raise ParseError(line_no, f"bad row id {toks[0]!r}") from None
        j, v = _parse_entry(f"{toks[1]}:{toks[2]}", line_no, dim, fmt.index_base)
        if cur_row is not None and row != cur_row:
            yield _build_vector(entries, dim, line_no - 1), 1.0
            entries = []
        cur_row = row
        entries.append((j, v))
    if cur_row is not None:
        yield _build_vector(entries, dim, last_no), 1.0


def _read_dense_csv(text, fmt: StreamFormat) -> Iterator[tuple[SparseVector, float]]:
    dim = fmt.dim
    for line_no, line in enumerate(text, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cells = line.split(",")
        if dim is None:
            dim = len(cells)
        elif len(cells) != dim:
            raise ParseError(line_no, f"expected {dim} columns, got {len(cells)}")
        entries = []
        for j, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(line_no, f"bad value {cell.strip()!r}") from None
            if not math.isfinite(v):
                raise ParseError(line_no, f"non-finite value {cell.strip()!r}")
            if v != 0.0:
                entries.append((j, v))
        yield _build_vector(entries, dim, line_no), 1.0


def read_points(source: Source, fmt: StreamFormat) -> Iterator[tuple[SparseVector, float]]:
    """Yield (point, weight) pairs lazily from a path or binary stream."""
    readers = {"pairs": _read_pairs, "triplets": _read_triplets,
               "dense_csv": _read_dense_csv}
    text, own = _open_text(source)
    try:
        yield from readers[fmt.kind](text, fmt)
    finally:
        if own:
            text.close()


def read_weighted_set(source: Source, fmt: StreamFormat,
                      additive: float = 0.0) -> WeightedSet:
    points, weights = [], []
    for p, w in read_points(source, fmt):
        points.append(p)
        weights.append(w)
    if not points:
        raise ParseError(0, "no points in input")
    return WeightedSet(points, np.asarray(weights), additive=additive)


def _pairs_line(p: SparseVector, w: float, always_weight: bool) -> str:
    toks = []
    if always_weight or w != 1.0:
        toks.append(f"w={_ftext(w)}")
    toks.extend(f"{j}:{_ftext(v)}" for j, v in zip(p.indices, p.values))
    return " ".join(toks)


def write_points(points: Iterable[tuple[SparseVector, float]], sink,
                 compress: bool | None = None) -> None:
    """Write (point, weight) pairs in pairs format, 0-based indices."""
    text, own = _open_write(sink, compress)
    try:
        for p, w in points:
            text.write(_pairs_line(p, w, always_weight=False) + "\n")
    finally:
        if own:
            text.close()


def write_coreset(S: Coreset, sink, compress: bool | None = None) -> None:
    """Coreset -> text file: one header, one pairs line per point, then an
    optional provenance block mapping each output point to source rows."""
    base = S.base
    eps = "none" if S.epsilon is None else _ftext(S.epsilon)
    bfk = "none" if S.built_for_k is None else str(S.built_for_k)
    text, own = _open_write(sink, compress)
    try:
        text.write(f"#coreset v1 dim={base.dim} count={len(base.points)} "
                   f"additive={_ftext(base.additive)} epsilon={eps} "
                   f"built_for_k={bfk}\n")
        for p, w in zip(base.points, base.weights):
            text.write(_pairs_line(p, float(w), always_weight=True) + "\n")
        if S.provenance is not None:
            text.write("#provenance\n")
            for i, row in enumerate(S.provenance):
                body = " ".join(f"{src}:{_ftext(c)}" for src, c in row)
                text.write(f"#p {i} {body}\n")
    finally:
        if own:
            text.close()


def _parse_header(line: str, line_no: int) -> dict:
    toks = line.split()
    if toks[:2] != ["#coreset", "v1"]:
        raise ParseError(line_no, "not a coreset file (missing '#coreset v1' header)")
    fields = {}
    for tok in toks[2:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ParseError(line_no, f"malformed header field {tok!r}")
        fields[key] = val
    try:
        out = {
            "dim": int(fields["dim"]),
            "count": int(fields["count"]),
            "additive": float(fields["additive"]),
            "epsilon": None if fields["epsilon"] == "none" else float(fields["epsilon"]),
            "built_for_k": None if fields["built_for_k"] == "none" else int(fields["built_for_k"]),
        }
    except KeyError as exc:
        raise ParseError(line_no, f"header missing field {exc.args[0]}") from None
    except ValueError:
        raise ParseError(line_no, "malformed header value") from None
    return out


def read_coreset(source: Source) -> Coreset:
    text, own = _open_text(source)
    try:
        header = None
        points: list[SparseVector] = []
        weights: list[float] = []
        prov: Optional[list[tuple[tuple[int, float], ...]]] = None
        for line_no, line in enumerate(text, start=1):
            line = line.strip()
            if not line:
                continue
            if header is None:
                header = _parse_header(line, line_no)
                continue
            if line == "#provenance":
                prov = []
                continue
            if line.startswith("#p "):
                if prov is None:
                    raise ParseError(line_no, "#p row outside provenance block")
                toks = line.split()
                try:
                    row_id = int(toks[1])
                except (IndexError, ValueError):
                    raise ParseError(line_no, "malformed #p row") from None
                if row_id != len(prov):
                    raise ParseError(line_no, f"provenance row {row_id} out of order")
                entries = []
                for tok in toks[2:]:
                    head, sep, tail = tok.partition(":")
                    try:
                        entries.append((int(head), float(tail)))
                    except ValueError:
                        raise ParseError(line_no, f"malformed provenance token {tok!r}") from None
                prov.append(tuple(entries))
                continue
            if line.startswith("#"):
                continue
            toks = line.split()
            if not toks or not toks[0].startswith("w="):
                raise ParseError(line_no, "coreset point line must start with w=")
            w = _parse_weight(toks[0], line_no)
            entries = [_parse_entry(t, line_no, header["dim"], 0) for t in toks[1:]]
            points.append(_build_vector(entries, header["dim"], line_no))
            weights.append(w)
        if header is None:
            raise ParseError(0, "empty coreset file")
        if len(points) != header["count"]:
            raise ParseError(0, f"header count {header['count']} != {len(points)} point lines")
        if prov is not None and len(prov) != len(points):
            raise ParseError(0, f"provenance rows {len(prov)} != {len(points)} points")
        base = WeightedSet(points, np.asarray(weights), additive=header["additive"])
        return Coreset(base=base, epsilon=header["epsilon"],
                       built_for_k=header["built_for_k"],
                       provenance=None if prov is None else tuple(prov))
    finally:
        if own:
            text.close()
