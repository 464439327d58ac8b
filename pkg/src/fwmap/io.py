"""Instance file formats (ASCII, whitespace separated).

``mrf``
    UAI ``MARKOV`` layout restricted to factors of arity 1 and 2.  Table
    values are energies (no log transform).
``tomo``
    ``TOMO <H> <W> <k> <c_trunc>`` followed by ``ROW <b> <n> <v_1> ... <v_n>``
    records; pixels are row-major indices.
``gm``
    ``p <N0> <N1> <A> <E>``, then ``a <id> <node> <label> <cost>`` and
    ``e <id1> <id2> <cost>`` lines; lines starting with ``c`` are comments.
"""

import re

import numpy as np

from .exceptions import ArityError, InfeasibleRow, ParseError
from .matching import MatchingInstance
from .mrf import MrfInstance
from .tomography import ProjectionRow, TomographyInstance
from .trace import TraceRecord, read_trace, write_trace

__all__ = [
    "TraceRecord",
    "dump_graph_matching",
    "dump_mrf",
    "dump_tomography",
    "parse_graph_matching",
    "parse_mrf",
    "parse_tomography",
    "read_instance",
    "read_trace",
    "write_trace",
]


def _fmt(x):
    return format(float(x), ".17g")


class _Tokens:
    def __init__(self, text):
        self._toks = [
            (m.group(), lineno)
            for lineno, line in enumerate(text.splitlines(), start=1)
            for m in re.finditer(r"\S+", line)
        ]
        self._pos = 0

    @property
    def line(self):
        if self._pos < len(self._toks):
            return self._toks[self._pos][1]
        return None

    def done(self):
        return self._pos >= len(self._toks)

    def next(self, what):
        if self.done():
            raise ParseError(f"unexpected end of input, expected {what}")
        tok, _ = self._toks[self._pos]
        self._pos += 1
        return tok

    def int(self, what, lo=None):
        line = self.line
        tok = self.next(what)
        try:
            value = int(tok)
        except ValueError:
            raise ParseError(f"expected integer {what}, got {tok!r}", line) from None
        if lo is not None and value < lo:
            raise ParseError(f"{what} must be >= {lo}, got {value}", line)
        return value

    def float(self, what):
        line = self.line
        tok = self.next(what)
        try:
            value = float(tok)
        except ValueError:
            raise ParseError(f"expected number {what}, got {tok!r}", line) from None
        if not np.isfinite(value):
            raise ParseError(f"{what} must be finite", line)
        return value

    def expect_end(self):
        if not self.done():
            raise ParseError(f"trailing data {self._toks[self._pos][0]!r}", self.line)


def parse_mrf(text):
    toks = _Tokens(text)
    line = toks.line
    if toks.next("header") != "MARKOV":
        raise ParseError("expected MARKOV header", line)
    n = toks.int("variable count", lo=1)
    cards = [toks.int("cardinality", lo=1) for _ in range(n)]
    n_factors = toks.int("factor count", lo=0)
    scopes = []
    for _ in range(n_factors):
        line = toks.line
        arity = toks.int("factor arity", lo=0)
        if arity not in (1, 2):
            raise ArityError(f"factor of arity {arity}; only unary and pairwise factors are supported", line)
        scope = []
        for _ in range(arity):
            vline = toks.line
            v = toks.int("variable index", lo=0)
            if v >= n:
                raise ParseError(f"variable {v} out of range", vline)
            scope.append(v)
        if arity == 2 and scope[0] == scope[1]:
            raise ParseError("pairwise factor over a single variable", line)
        scopes.append(scope)
    unaries = [np.zeros(k) for k in cards]
    pairwise = {}
    for scope in scopes:
        line = toks.line
        size = toks.int("table size", lo=1)
        expected = int(np.prod([cards[v] for v in scope]))
        if size != expected:
            raise ParseError(f"table size {size}, expected {expected}", line)
        values = np.array([toks.float("table value") for _ in range(size)])
        if len(scope) == 1:
            unaries[scope[0]] = unaries[scope[0]] + values
        else:
            a, b = scope
            table = values.reshape(cards[a], cards[b])
            if a > b:
                a, b, table = b, a, table.T
            pairwise[(a, b)] = pairwise[(a, b)] + table if (a, b) in pairwise else table
    toks.expect_end()
    return MrfInstance(cards, unaries, pairwise)


def dump_mrf(instance):
    lines = ["MARKOV", str(instance.num_nodes), " ".join(map(str, instance.num_labels))]
    edges = sorted(instance.pairwise)
    lines.append(str(instance.num_nodes + len(edges)))
    lines += [f"1 {v}" for v in range(instance.num_nodes)]
    lines += [f"2 {a} {b}" for a, b in edges]
    lines.append("")
    tables = list(instance.unaries) + [instance.pairwise[e] for e in edges]
    for table in tables:
        flat = np.asarray(table).reshape(-1)
        lines.append(str(flat.size))
        lines.append(" ".join(_fmt(x) for x in flat))
        lines.append("")
    return "\n".join(lines)


def parse_tomography(text):
    toks = _Tokens(text)
    line = toks.line
    if toks.next("header") != "TOMO":
        raise ParseError("expected TOMO header", line)
    height = toks.int("height", lo=1)
    width = toks.int("width", lo=1)
    k = toks.int("label bound", lo=1)
    truncation = toks.float("truncation")
    rows = []
    while not toks.done():
        line = toks.line
        if toks.next("ROW") != "ROW":
            raise ParseError("expected ROW record", line)
        total = toks.int("row sum", lo=0)
        count = toks.int("pixel count", lo=1)
        pixels = []
        for _ in range(count):
            pline = toks.line
            v = toks.int("pixel index", lo=0)
            if v >= height * width:
                raise ParseError(f"pixel {v} outside the {height}x{width} grid", pline)
            pixels.append(v)
        if len(set(pixels)) != len(pixels):
            raise ParseError("row lists a pixel twice", line)
        if total > count * k:
            raise InfeasibleRow(f"line {line}: row sum {total} exceeds {count} * {k}")
        rows.append(ProjectionRow(tuple(pixels), total, k))
    return TomographyInstance(height, width, k, truncation, rows)


def dump_tomography(instance):
    lines = [f"TOMO {instance.height} {instance.width} {instance.k} {_fmt(instance.truncation)}"]
    for r in instance.rows:
        lines.append(f"ROW {r.total} {len(r.pixels)} " + " ".join(map(str, r.pixels)))
    return "\n".join(lines) + "\n"


def parse_graph_matching(text):
    header = None
    assignments = {}
    by_id = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        kind, args = parts[0], parts[1:]
        try:
            if kind == "p":
                if header is not None:
                    raise ParseError("second p line", lineno)
                if len(args) != 4:
                    raise ParseError("p line needs 4 fields", lineno)
                header = [int(a) for a in args]
                if min(header) < 0:
                    raise ParseError("negative count in p line", lineno)
            elif header is None:
                raise ParseError("p line must come first", lineno)
            elif kind == "a":
                if len(args) != 4:
                    raise ParseError("a line needs 4 fields", lineno)
                aid, node, label, cost = int(args[0]), int(args[1]), int(args[2]), float(args[3])
                if aid in by_id:
                    raise ParseError(f"duplicate assignment id {aid}", lineno)
                if not (0 <= node < header[0] and 0 <= label < header[1]):
                    raise ParseError(f"assignment ({node}, {label}) out of range", lineno)
                if (node, label) in assignments:
                    raise ParseError(f"duplicate assignment ({node}, {label})", lineno)
                if not np.isfinite(cost):
                    raise ParseError("cost must be finite", lineno)
                by_id[aid] = (node, label)
                assignments[(node, label)] = cost
            elif kind == "e":
                if len(args) != 3:
                    raise ParseError("e line needs 3 fields", lineno)
                id1, id2, cost = int(args[0]), int(args[1]), float(args[2])
                for aid in (id1, id2):
                    if aid not in by_id:
                        raise ParseError(f"unknown assignment id {aid}", lineno)
                a, b = by_id[id1], by_id[id2]
                if a[0] == b[0]:
                    raise ParseError("edge joins two assignments of the same node", lineno)
                if not np.isfinite(cost):
                    raise ParseError("cost must be finite", lineno)
                edges.append((a, b, cost))
            else:
                raise ParseError(f"unknown record {kind!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed number: {exc}", lineno) from None
    if header is None:
        raise ParseError("missing p line")
    if len(assignments) != header[2]:
        raise ParseError(f"p line announces {header[2]} assignments, found {len(assignments)}")
    if len(edges) != header[3]:
        raise ParseError(f"p line announces {header[3]} edges, found {len(edges)}")
    pairwise = {}
    for a, b, cost in edges:
        key = (a, b) if a[0] < b[0] else (b, a)
        pairwise[key] = pairwise.get(key, 0.0) + cost
    return MatchingInstance(header[0], header[1], assignments, pairwise)


def dump_graph_matching(instance):
    ids = {pair: i for i, pair in enumerate(sorted(instance.assignments))}
    lines = [
        f"p {instance.num_nodes} {instance.num_labels} {len(ids)} {len(instance.pairwise)}"
    ]
    for pair, i in ids.items():
        lines.append(f"a {i} {pair[0]} {pair[1]} {_fmt(instance.assignments[pair])}")
    for (a, b), cost in sorted(instance.pairwise.items()):
        lines.append(f"e {ids[a]} {ids[b]} {_fmt(cost)}")
    return "\n".join(lines) + "\n"


_PARSERS = {"mrf": parse_mrf, "tomo": parse_tomography, "gm": parse_graph_matching}


def read_instance(path, kind):
    with open(path, encoding="ascii") as fh:
        return _PARSERS[kind](fh.read())
