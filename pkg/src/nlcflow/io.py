"""Run configuration text format, NLCF binary snapshots and CSV norm series.

Config files are line oriented::

    [grid]
    N = 64
    L = 100.53096491487338   # 32 pi

Values are integers, reals, booleans (``true``/``false``), 3-vectors
``(a, b, c)``, lists ``{a, b, c}`` or bare words.  ``#`` starts a comment.
Unknown sections or keys, duplicate keys, type mismatches and invariant
violations raise :class:`ConfigError` naming the line.
"""

from __future__ import annotations

import csv
import math
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .diagnostics import DEFAULT_P_LIST, NormSeries
from .initial import Bump, InitSpec
from .model import FlowState, ModelParams
from .spectral import Grid

MAGIC = b"NLCF"
VERSION = 1
HEADER = struct.Struct("<4sIIdd")


class ConfigError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class DiagnosticsConfig:
    K_max: int = 2
    p_list: tuple[float, ...] = DEFAULT_P_LIST
    cadence: float = 0.5
    fit_window: tuple[float, float] = (5.0, 100.0)
    delta0: float = 1e-2
    snapshot_cadence: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    grid: Grid = field(default_factory=lambda: Grid(64, 32 * math.pi))
    model: ModelParams = field(default_factory=ModelParams)
    init: InitSpec = field(default_factory=InitSpec)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    output_dir: str = "out"


# ---------------------------------------------------------------- values

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?|inf)$")
_WORD = re.compile(r"^[A-Za-z_./][A-Za-z0-9_./-]*$")


def _split_items(body: str) -> list[str]:
    items, depth, cur = [], 0, ""
    for ch in body:
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        if ch == "," and depth == 0:
            items.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        items.append(cur.strip())
    return items


def parse_value(text: str) -> Any:
    """Typed value: ``int``, ``float``, ``bool``, ``tuple`` (3-vector), ``list`` or ``str``."""
    s = text.strip()
    if s in ("true", "false"):
        return s == "true"
    if s.startswith("(") and s.endswith(")"):
        parts = _split_items(s[1:-1])
        if len(parts) != 3:
            raise ValueError(f"3-vector needs three entries, got {len(parts)}")
        vals = [parse_value(p) for p in parts]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            raise ValueError("3-vector entries must be numbers")
        return tuple(float(v) for v in vals)
    if s.startswith("{") and s.endswith("}"):
        return [parse_value(p) for p in _split_items(s[1:-1])]
    if re.fullmatch(r"[+-]?\d+", s):
        return int(s)
    if _NUMBER.match(s):
        return float(s)
    if len(s) >= 2 and s[0] == s[-1] == '"':
        return s[1:-1]
    if _WORD.match(s):
        return s
    raise ValueError(f"cannot parse value {s!r}")


def format_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(format_value(float(x)) for x in v) + ")"
    if isinstance(v, list):
        return "{" + ", ".join(format_value(x) for x in v) + "}"
    if isinstance(v, str):
        if any(c in v for c in '#"\n'):
            raise ValueError(f"string {v!r} cannot be written: '#', quotes and newlines are not representable")
        return v if _WORD.match(v) else f'"{v}"'
    raise TypeError(f"cannot format {v!r}")


# ---------------------------------------------------------------- schema


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("integer")
    return v


def _real(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("real")
    return float(v)


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError("boolean")
    return v


def _vec(v):
    if not isinstance(v, tuple):
        raise TypeError("3-vector")
    return v


def _word(v):
    if not isinstance(v, str):
        raise TypeError("word")
    return v


def _list_of(conv):
    def inner(v):
        if not isinstance(v, list):
            raise TypeError("list")
        return [conv(x) for x in v]

    return inner


def _check(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


Spec = tuple[Callable, Optional[Callable]]

SCHEMA: dict[str, dict[str, Spec]] = {
    "grid": {
        "N": (_int, lambda v: _check(v >= 8 and v % 2 == 0, "N must be even ≥ 8")),
        "L": (_real, lambda v: _check(v > 0 and math.isfinite(v), "L must be > 0")),
    },
    "model": {
        "mu": (_real, lambda v: _check(v > 0, "mu must be > 0")),
        "w0": (_vec, lambda v: _check(abs(math.sqrt(sum(x * x for x in v)) - 1) <= 1e-14, "w0 must be a unit vector")),
        "dt": (_real, lambda v: _check(v > 0, "dt must be > 0")),
        "t_end": (_real, lambda v: _check(v >= 0, "t_end must be ≥ 0")),
        "dealias_on": (_bool, None),
        "renormalize_director": (_word, lambda v: _check(v in ("off", "every_step"), "renormalize_director must be off or every_step")),
        "constraint_abort_tol": (_real, lambda v: _check(v > 0, "constraint_abort_tol must be > 0")),
        "nonlinear": (_bool, None),
    },
    "init": {
        "seed": (_int, None),
        "centers": (_list_of(_vec), None),
        "widths": (_list_of(_real), lambda v: _check(all(w > 0 for w in v), "widths must be > 0")),
        "velocity_amplitude": (_real, lambda v: _check(v >= 0, "velocity_amplitude must be ≥ 0")),
        "director_amplitude": (_real, lambda v: _check(v >= 0, "director_amplitude must be ≥ 0")),
    },
    "diagnostics": {
        "K_max": (_int, lambda v: _check(v >= 0, "K_max must be ≥ 0")),
        "p_list": (_list_of(_real), lambda v: _check(all(p >= 1 for p in v) and len(set(v)) == len(v), "p_list entries must be distinct and ≥ 1")),
        "cadence": (_real, lambda v: _check(v > 0, "cadence must be > 0")),
        "fit_window": (_list_of(_real), lambda v: _check(len(v) == 2 and v[1] > v[0], "fit_window must be {t0, t1} with t1 > t0")),
        "delta0": (_real, lambda v: _check(v > 0, "delta0 must be > 0")),
        "snapshot_cadence": (_real, lambda v: _check(v >= 0, "snapshot_cadence must be ≥ 0")),
    },
    "output": {
        "dir": (_word, None),
    },
}


def parse_config(text: str) -> RunConfig:
    values: dict[str, dict[str, Any]] = {s: {} for s in SCHEMA}
    lines: dict[tuple[str, str], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(lineno, f"malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(lineno, f"unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(lineno, f"expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(lineno, "key outside of any section")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(lineno, f"unknown key {key!r} in [{section}]")
        if key in values[section]:
            raise ConfigError(lineno, f"duplicate key {key!r} in [{section}] (first at line {lines[section, key]})")
        conv, check = SCHEMA[section][key]
        try:
            v = parse_value(rhs)
        except ValueError as e:
            raise ConfigError(lineno, str(e)) from None
        try:
            v = conv(v)
        except TypeError as e:
            raise ConfigError(lineno, f"{key} must be a {e}, got {rhs.strip()!r}") from None
        if check is not None:
            try:
                check(v)
            except ValueError as e:
                raise ConfigError(lineno, str(e)) from None
        values[section][key] = v
        lines[section, key] = lineno

    def where(sec, key):
        return lines.get((sec, key), lines.get((sec, next(iter(values[sec]), "")), 0))

    base = RunConfig()
    g = values["grid"]
    grid = Grid(g.get("N", base.grid.N), g.get("L", base.grid.L))

    m = dict(values["model"])
    if "w0" in m:
        m["w0"] = tuple(m["w0"])
    try:
        model = ModelParams(**m)
    except ValueError as e:
        raise ConfigError(where("model", "w0"), str(e)) from None

    d = dict(values["diagnostics"])
    if "p_list" in d:
        d["p_list"] = tuple(d["p_list"])
    if "fit_window" in d:
        d["fit_window"] = tuple(d["fit_window"])
    diag = DiagnosticsConfig(**d)

    ini = values["init"]
    centers, widths = ini.get("centers", []), ini.get("widths", [])
    if len(centers) != len(widths):
        raise ConfigError(where("init", "widths"), f"{len(centers)} centers but {len(widths)} widths")
    for w in widths:
        if w > grid.L / 8:
            raise ConfigError(where("init", "widths"), f"width {w} exceeds L/8 = {grid.L / 8}")
    init = InitSpec(
        seed=ini.get("seed", 0),
        bumps=tuple(Bump(tuple(c), w) for c, w in zip(centers, widths)),
        velocity_amplitude=ini.get("velocity_amplitude", 1.0),
        director_amplitude=ini.get("director_amplitude", 1.0),
        delta0=diag.delta0,
    )
    out = values["output"].get("dir", base.output_dir)
    return RunConfig(grid, model, init, diag, out)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text; ``parse_config(serialize_config(c))`` reproduces ``c``."""
    m, d, i = cfg.model, cfg.diagnostics, cfg.init
    sections = [
        ("grid", [("N", cfg.grid.N), ("L", float(cfg.grid.L))]),
        (
            "model",
            [
                ("mu", float(m.mu)),
                ("w0", tuple(m.w0)),
                ("dt", float(m.dt)),
                ("t_end", float(m.t_end)),
                ("dealias_on", m.dealias_on),
                ("renormalize_director", m.renormalize_director),
                ("constraint_abort_tol", float(m.constraint_abort_tol)),
                ("nonlinear", m.nonlinear),
            ],
        ),
        (
            "init",
            [
                ("seed", i.seed),
                ("centers", [tuple(b.center) for b in i.bumps]),
                ("widths", [float(b.width) for b in i.bumps]),
                ("velocity_amplitude", float(i.velocity_amplitude)),
                ("director_amplitude", float(i.director_amplitude)),
            ],
        ),
        (
            "diagnostics",
            [
                ("K_max", d.K_max),
                ("p_list", [float(p) for p in d.p_list]),
                ("cadence", float(d.cadence)),
                ("fit_window", [float(x) for x in d.fit_window]),
                ("delta0", float(d.delta0)),
                ("snapshot_cadence", float(d.snapshot_cadence)),
            ],
        ),
        ("output", [("dir", cfg.output_dir)]),
    ]
    out = []
    for name, items in sections:
        out.append(f"[{name}]")
        out += [f"{k} = {format_value(v)}" for k, v in items]
        out.append("")
    return "\n".join(out)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- snapshots


def write_snapshot(state: FlowState, path) -> Path:
    """``NLCF`` header, then u1 u2 u3 n1 n2 n3 as little-endian f64 with x varying fastest."""
    path = Path(path)
    g = state.grid
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, g.N, float(g.L), float(state.t)))
        for arr in (*state.u.array, *state.n.array):
            fh.write(np.asarray(arr, dtype="<f8").tobytes(order="F"))
    return path


def read_snapshot(path) -> FlowState:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise SnapshotError(f"{path}: bad magic at offset 0 (expected {MAGIC!r}, got {raw[:4]!r})")
    if len(raw) < HEADER.size:
        raise SnapshotError(f"{path}: truncated header ({len(raw)} bytes)")
    _, version, N, L, t = HEADER.unpack_from(raw)
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported version {version} at offset 4")
    payload = len(raw) - HEADER.size
    expected = 6 * N**3 * 8
    if payload != expected:
        kind = "truncated file" if payload < expected else "trailing bytes"
        raise SnapshotError(f"{path}: {kind}: N = {N} implies {expected} payload bytes, found {payload}")
    grid = Grid(N, L)
    data = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).astype(np.float64)
    arrays = [data[i * N**3 : (i + 1) * N**3].reshape((N, N, N), order="F") for i in range(6)]
    return FlowState.from_arrays(grid, t, np.stack(arrays[:3]), np.stack(arrays[3:]))


# ---------------------------------------------------------------- CSV series


def write_series(series: NormSeries, path) -> Path:
    path = Path(path)
    if len(series) == 0:
        raise ValueError("refusing to write an empty series")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(series.names)
            for row in series.rows():
                w.writerow([repr(float(row[n])) for n in series.names])
    except OSError as e:
        raise OSError(f"cannot write series to {path}: {e}") from e
    return path


def read_series(path) -> NormSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        series = NormSeries(names)
        for row in reader:
            series.append({n: float(v) for n, v in zip(names, row)})
    return series
