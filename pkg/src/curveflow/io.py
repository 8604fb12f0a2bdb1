"""Snapshot (JSON lines), diagnostics (CSV) and SVG frame writers.

Floats are written with ``repr``, the shortest string that round-trips, so
a snapshot read back reproduces the nodes bitwise.
"""
import csv
import json
import os

import numpy as np

from curveflow.errors import IoError
from curveflow.grid import CurveState
from curveflow.monitor import DiagnosticsRecord

DIAGNOSTICS_HEADER = DiagnosticsRecord.columns()


def _open(path, mode):
    try:
        return open(path, mode, newline="" if "w" in mode or "a" in mode else None)
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None


def snapshot_line(state):
    nodes = ",".join("[" + ",".join(repr(float(v)) for v in row) + "]" for row in state.nodes)
    return f'{{"t":{state.t!r},"n":{state.n},"N":{state.N},"nodes":[{nodes}]}}'


def write_snapshot(sink, state):
    """Append one snapshot to an open text sink."""
    sink.write(snapshot_line(state) + "\n")


def read_snapshots(path):
    states = []
    with _open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                nodes = np.array(obj["nodes"], dtype=np.float64)
                if nodes.shape != (obj["N"], obj["n"]):
                    raise ValueError(f"nodes shape {nodes.shape} != ({obj['N']}, {obj['n']})")
                states.append(CurveState(nodes, obj["t"]))
            except (ValueError, KeyError, TypeError) as exc:
                raise IoError(path, f"line {lineno}: {exc}") from None
    return states


class DiagnosticsWriter:
    def __init__(self, sink):
        self._w = csv.writer(sink, lineterminator="\n")
        self._w.writerow(DIAGNOSTICS_HEADER)

    def write(self, record):
        self._w.writerow([repr(float(v)) for v in record.as_row()])


def write_diagnostics(sink, records):
    w = DiagnosticsWriter(sink)
    for r in records:
        w.write(r)


def read_diagnostics(path):
    with _open(path, "r") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DIAGNOSTICS_HEADER:
            raise IoError(path, "unexpected diagnostics header")
        return [DiagnosticsRecord(*map(float, row)) for row in reader]


def svg_text(state, size=400, margin=10):
    """Closed polygon of the first two coordinates, viewBox fitted to the curve."""
    xy = state.nodes[:, :2]
    lo = xy.min(axis=0)
    span = float(max((xy.max(axis=0) - lo).max(), 1e-12))
    scale = (size - 2 * margin) / span
    # flip y so the picture has the usual orientation
    px = margin + (xy[:, 0] - lo[0]) * scale
    py = size - margin - (xy[:, 1] - lo[1]) * scale
    pts = [(px[i], py[i]) for i in range(len(px))] + [(px[0], py[0])]
    d = "M " + " L ".join(f"{x:.4f},{y:.4f}" for x, y in pts) + " Z"
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {size}" '
        f'width="{size}" height="{size}">\n'
        f"<title>t = {state.t:.6g}</title>\n"
        f'<path d="{d}" fill="none" stroke="black" stroke-width="1"/>\n'
        "</svg>\n"
    )


def svg_name(index):
    return f"snapshot_{index:06d}.svg"


def write_svg(directory, index, state):
    path = os.path.join(directory, svg_name(index))
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise IoError(directory, exc.strerror or str(exc)) from None
    with _open(path, "w") as fh:
        fh.write(svg_text(state))
    return path


class RunWriter:
    """Streams one run's snapshots, diagnostics and SVG frames to disk."""

    def __init__(self, output, out_dir):
        base = output.dir or out_dir or "."
        self.base = base
        try:
            os.makedirs(base, exist_ok=True)
        except OSError as exc:
            raise IoError(base, exc.strerror or str(exc)) from None
        self.snapshot_path = os.path.join(base, output.snapshots)
        self.diagnostics_path = os.path.join(base, output.diagnostics)
        self.svg_dir = os.path.join(base, output.svg_dir) if output.svg_every else None
        self.svg_every = output.svg_every
        self._snap = _open(self.snapshot_path, "w")
        self._diag_fh = _open(self.diagnostics_path, "w")
        self._diag = DiagnosticsWriter(self._diag_fh)
        self._count = 0

    def snapshot(self, state):
        write_snapshot(self._snap, state)
        if self.svg_dir and self._count % self.svg_every == 0:
            write_svg(self.svg_dir, self._count, state)
        self._count += 1

    def record(self, rec):
        self._diag.write(rec)

    def close(self):
        self._snap.close()
        self._diag_fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
