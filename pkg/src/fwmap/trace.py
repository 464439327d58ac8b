"""Per-evaluation trace records and their CSV form."""

import csv
from dataclasses import astuple, dataclass

TRACE_HEADER = ("time_s", "iter", "h", "h_best", "A", "B", "f_prox", "solver")


@dataclass(frozen=True)
class TraceRecord:
    wall_time_s: float
    mp_iteration: int
    h_current: float
    h_best: float
    A_gap: float
    B_gap: float
    f_prox: float
    solver: str


def _fmt(value):
    return format(value, ".17g")


def write_trace(records, path):
    """Write records as CSV with 17 significant digits and ``\\n`` line ends."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for r in records:
            fields = [
                _fmt(r.wall_time_s),
                str(int(r.mp_iteration)),
                _fmt(r.h_current),
                _fmt(r.h_best),
                _fmt(r.A_gap),
                _fmt(r.B_gap),
                _fmt(r.f_prox),
                r.solver,
            ]
            fh.write(",".join(fields) + "\n")


def read_trace(path):
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header!r}")
        records = []
        for row in reader:
            t, it, h, hb, a, b, fp, solver = row
            records.append(
                TraceRecord(
                    float(t), int(it), float(h), float(hb),
                    float(a), float(b), float(fp), solver,
                )
            )
    return records


def as_rows(records):
    return [astuple(r) for r in records]
