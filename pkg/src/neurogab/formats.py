"""Text formats: H matrices, layouts, traces, word lists and run manifests.

Every writer starts with a single ``# neurogab <version>`` header line so
that outputs of identical runs are byte-identical apart from that line.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .compiler import DecoderLayout, Variant, WordResult
from .engine import NeuronLocation, TraceLog
from .fabric import AxonEntry, CoreConfig, Destination, GridConfig, NeuronConfig, OpSelect
from .gab import DecoderParams, HMatrix, make_example8

HEADER = f"# neurogab {__version__}"
BUILTIN_H = {"@example8": make_example8}
LAYOUT_FORMAT = 1


class FormatError(ValueError):
    """A file does not parse; ``line`` is 1-based when known."""

    def __init__(self, path, line: Optional[int], message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def _content_lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield no, line


# ---- H matrices -------------------------------------------------------------

def parse_h(text: str, path="<string>") -> HMatrix:
    """``M N d_v d_c`` on the first line, then M rows of N characters in {0,1}."""
    lines = list(_content_lines(text))
    if not lines:
        raise FormatError(path, None, "empty H file")
    no, head = lines[0]
    parts = head.split()
    try:
        M, N, d_v, d_c = (int(p) for p in parts)
    except ValueError:
        raise FormatError(path, no, f"expected 'M N d_v d_c', got {head!r}") from None
    if min(M, N, d_v, d_c) <= 0:
        raise FormatError(path, no, "dimensions and degrees must be positive")
    if N <= M:
        raise FormatError(path, no, f"need N > M, got M={M} N={N}")
    rows = lines[1:]
    if len(rows) != M:
        at = rows[M][0] if len(rows) > M else (rows[-1][0] if rows else no)
        raise FormatError(path, at, f"expected {M} matrix rows, found {len(rows)}")
    mat = np.zeros((M, N), dtype=np.uint8)
    for m, (no, row) in enumerate(rows):
        if len(row) != N or set(row) - {"0", "1"}:
            raise FormatError(path, no, f"row must be {N} characters of 0/1, got {row!r}")
        mat[m] = [int(c) for c in row]
        if int(mat[m].sum()) != d_c:
            raise FormatError(path, no, f"row weight {int(mat[m].sum())} != d_c = {d_c}")
    cols = mat.sum(axis=0)
    if (cols != d_v).any():
        bad = int(np.flatnonzero(cols != d_v)[0])
        raise FormatError(path, lines[0][0],
                          f"column {bad} has weight {int(cols[bad])}, declared d_v = {d_v}")
    return HMatrix(mat)


def format_h(h: HMatrix) -> str:
    rows = ["".join(str(int(b)) for b in r) for r in h.entries]
    return "\n".join([HEADER, f"{h.M} {h.N} {h.d_v} {h.d_c}", *rows]) + "\n"


def load_h(path) -> HMatrix:
    if str(path) in BUILTIN_H:
        return BUILTIN_H[str(path)]()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(path, None, exc.strerror or str(exc)) from None
    return parse_h(text, path)


# ---- layouts ----------------------------------------------------------------

def _frac(x: Optional[Fraction]):
    return None if x is None else str(x)


def _neuron_dict(n: NeuronConfig, fan_in: list[int]) -> dict:
    d = n.destination
    return {
        "label": n.label,
        "op_select": n.op_select.value,
        "weights": list(n.weights),
        "threshold": n.threshold,
        "leak": n.leak,
        "reset_potential": n.reset_potential,
        "destination": None if d is None else {
            "core": None if d.core is None else list(d.core),
            "axon": d.axon,
            "delay": d.delay,
        },
        "fan_in": fan_in,
    }


def grid_to_dict(grid: GridConfig) -> dict:
    cores = []
    for c in grid.coords():
        core = grid.cores[c]
        cores.append({
            "coord": list(c),
            "role": core.role,
            "capacity": list(core.capacity),
            "axons": [{"label": a.label, "type": a.type_index} for a in core.axons],
            "neurons": [_neuron_dict(n, np.flatnonzero(core.crossbar[:, j]).tolist())
                        for j, n in enumerate(core.neurons)],
        })
    return {"width": grid.width, "height": grid.height, "cores": cores}


def _req(d: dict, key: str, where: str):
    if key not in d:
        raise FormatError(where, None, f"missing field {key!r}")
    return d[key]


def grid_from_dict(data: dict, where="layout") -> GridConfig:
    cores = {}
    for cd in _req(data, "cores", where):
        coord = tuple(_req(cd, "coord", where))
        axons = [AxonEntry(int(_req(a, "type", where)), a.get("label", ""))
                 for a in _req(cd, "axons", where)]
        neurons, xbar_cols = [], []
        for nd in _req(cd, "neurons", where):
            dd = _req(nd, "destination", where)
            dest = None if dd is None else Destination(
                None if dd["core"] is None else tuple(dd["core"]), int(dd["axon"]),
                int(dd["delay"]))
            neurons.append(NeuronConfig(
                tuple(_req(nd, "weights", where)), int(_req(nd, "threshold", where)),
                int(_req(nd, "leak", where)), int(_req(nd, "reset_potential", where)),
                OpSelect(_req(nd, "op_select", where)), dest, nd.get("label", "")))
            xbar_cols.append(_req(nd, "fan_in", where))
        xbar = np.zeros((len(axons), len(neurons)), dtype=bool)
        for j, src in enumerate(xbar_cols):
            xbar[list(src), j] = True
        cores[coord] = CoreConfig(axons, neurons, xbar, tuple(_req(cd, "capacity", where)),
                                  cd.get("role", ""))
    return GridConfig(int(_req(data, "width", where)), int(_req(data, "height", where)),
                      cores)


def layout_to_dict(layout: DecoderLayout) -> dict:
    p = layout.params
    return {
        "format": LAYOUT_FORMAT,
        "variant": layout.variant.value,
        "params": {"max_iter": p.max_iter, "tie_threshold": _frac(p.tie_threshold),
                   "decision_threshold": _frac(p.decision_threshold)},
        "h": ["".join(str(int(b)) for b in r) for r in layout.h.entries],
        "roles": {r: list(c) for r, c in layout.roles.items()},
        "port_map": {k: [list(c), i] for k, (c, i) in layout.port_map.items()},
        "xor_neurons": [[list(c), i] for c, i in layout.xor_neurons],
        "grid": grid_to_dict(layout.grid),
    }


def layout_from_dict(data: dict, where="layout") -> DecoderLayout:
    if data.get("format") != LAYOUT_FORMAT:
        raise FormatError(where, None, f"unsupported layout format {data.get('format')!r}")
    pd = _req(data, "params", where)

    def fr(x):
        return None if x is None else Fraction(x)

    params = DecoderParams(int(pd["max_iter"]), fr(pd.get("tie_threshold")),
                           fr(pd.get("decision_threshold")))
    return DecoderLayout(
        grid=grid_from_dict(_req(data, "grid", where), where),
        variant=Variant.parse(_req(data, "variant", where)),
        h=HMatrix.from_rows(_req(data, "h", where)),
        params=params,
        roles={r: tuple(c) for r, c in _req(data, "roles", where).items()},
        port_map={k: (tuple(c), int(i)) for k, (c, i) in _req(data, "port_map", where).items()},
        xor_neurons=[(tuple(c), int(i)) for c, i in data.get("xor_neurons", [])],
    )


def save_layout(layout: DecoderLayout, path) -> None:
    body = json.dumps(layout_to_dict(layout), indent=1, sort_keys=True)
    Path(path).write_text(HEADER + "\n" + body + "\n")


def load_layout(path) -> DecoderLayout:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(path, None, exc.strerror or str(exc)) from None
    if text.startswith("#"):
        text = text.split("\n", 1)[1] if "\n" in text else ""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        # +1 for the header line stripped above
        raise FormatError(path, exc.lineno + 1, exc.msg) from None
    try:
        return layout_from_dict(data, str(path))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(path, None, f"bad layout: {exc}") from None


# ---- word lists and results ---------------------------------------------------

def parse_words(text: str, n: Optional[int] = None, path="<string>") -> list[str]:
    """One bit string per line, r_0 leftmost; ``#`` lines and blanks ignored."""
    words = []
    for no, line in _content_lines(text):
        if set(line) - {"0", "1"}:
            raise FormatError(path, no, f"not a binary word: {line!r}")
        if n is not None and len(line) != n:
            raise FormatError(path, no, f"word length {len(line)} != N = {n}")
        words.append(line)
    return words


def load_words(path, n: Optional[int] = None) -> list[str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(path, None, exc.strerror or str(exc)) from None
    return parse_words(text, n, path)


def format_words(words: Iterable) -> str:
    lines = [w if isinstance(w, str) else "".join(str(int(b)) for b in w) for w in words]
    return "\n".join([HEADER, *lines]) + "\n"


RESULT_FIELDS = ["word", "x_prime", "status", "output_tick"]


def format_results(results: Sequence[WordResult]) -> str:
    lines = [HEADER, ",".join(RESULT_FIELDS)]
    for r in results:
        status = "converged" if r.converged else ("failed" if r.x_prime else "missing")
        tick = "" if r.output_tick is None else str(r.output_tick)
        lines.append(f"{r.word},{r.x_prime or ''},{status},{tick}")
    return "\n".join(lines) + "\n"


def parse_results(text: str) -> list[dict]:
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(body))


# ---- traces -----------------------------------------------------------------

TRACE_FIELDS = "tick,core_x,core_y,neuron_index,label"


def write_trace(trace: TraceLog, path) -> None:
    """Neuron spikes then host deliveries, each block ordered by tick."""
    locs = trace.locations
    with open(path, "w", newline="") as fh:
        fh.write(HEADER + "\n" + TRACE_FIELDS + "\n")
        w = csv.writer(fh, lineterminator="\n")
        order = np.lexsort((trace.spike_loc, trace.spike_tick))
        w.writerows((int(trace.spike_tick[k]), locs[trace.spike_loc[k]].core[0],
                     locs[trace.spike_loc[k]].core[1], locs[trace.spike_loc[k]].index,
                     locs[trace.spike_loc[k]].label) for k in order)
        w.writerows((t, "host", "host", loc.index, loc.label)
                    for t, loc in trace.host_deliveries())


def read_trace(path) -> TraceLog:
    """Rebuild a :class:`TraceLog`; host rows are attributed to their source neuron."""
    ids: dict[tuple, int] = {}
    locations: list[NeuronLocation] = []
    st, sl, host_rows = [], [], []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FormatError(path, None, exc.strerror or str(exc)) from None
    with fh:
        for no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#") or line == TRACE_FIELDS:
                continue
            parts = line.split(",", 4)
            if len(parts) != 5:
                raise FormatError(path, no, f"expected 5 fields, got {len(parts)}")
            try:
                tick, x, y, idx = int(parts[0]), parts[1], parts[2], int(parts[3])
                if x == "host":
                    host_rows.append((tick, idx, parts[4]))
                    continue
                key = ((int(x), int(y)), idx)
            except ValueError:
                raise FormatError(path, no, f"malformed trace row {line!r}") from None
            if key not in ids:
                ids[key] = len(locations)
                locations.append(NeuronLocation(key[0], idx, parts[4]))
            st.append(tick)
            sl.append(ids[key])
    by_label = {}
    for i, loc in enumerate(locations):
        by_label.setdefault((loc.index, loc.label), i)
    ht, hl = [], []
    for tick, idx, label in host_rows:
        key = (idx, label)
        if key not in by_label:
            by_label[key] = len(locations)
            locations.append(NeuronLocation((-1, -1), idx, label))
        ht.append(tick)
        hl.append(by_label[key])
    end = max(st + ht, default=0)
    return TraceLog(locations, st, sl, ht, hl, end)


# ---- manifests --------------------------------------------------------------

@dataclass
class RunManifest:
    h_file: str
    variant: str = Variant.XOR_INTEGRATED.value
    max_iter: int = 100
    layout_file: Optional[str] = None
    schedule_file: Optional[str] = None
    tick_hz: Optional[float] = None
    power_ratio: float = 1.0174
    energy_per_spike: float = 109e-12
    out_dir: str = "."
    extra: dict = field(default_factory=dict)

    def validate(self) -> HMatrix:
        """Check every referenced file parses; returns the H matrix."""
        Variant.parse(self.variant)
        if self.max_iter < 1:
            raise FormatError("manifest", None, "max_iter must be >= 1")
        h = load_h(self.h_file)
        if self.layout_file is not None:
            load_layout(self.layout_file)
        if self.schedule_file is not None:
            load_words(self.schedule_file, h.N)
        return h

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise FormatError(path, None, exc.strerror or str(exc)) from None
        except json.JSONDecodeError as exc:
            raise FormatError(path, exc.lineno, exc.msg) from None
        base = Path(path).parent
        known = {k: data.pop(k) for k in list(data) if k in cls.__dataclass_fields__}
        data.update(known.pop("extra", None) or {})
        if "h_file" not in known:
            raise FormatError(path, None, "manifest needs h_file")
        for k in ("h_file", "layout_file", "schedule_file"):
            v = known.get(k)
            if v and not str(v).startswith("@") and not os.path.isabs(v):
                known[k] = str(base / v)
        return cls(**known, extra=data)
