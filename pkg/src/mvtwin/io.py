"""Waveform CSV files and flat ``key = value`` configuration files.

Waveform layout::

    # fs=30000
    # version=1            (optional ``# key=value`` lines)
    t,uA,uB,uC,iA,iB,iC    (``t`` then any subset of the six channels)
    0.0,1.5,...

Floats are written with ``repr`` so a write/read round trip is bit-exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import fields
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError
from .twin import TransformerParams
from .waveform import SampledWaveform

FORMAT_VERSION = 1
CHANNELS = ("uA", "uB", "uC", "iA", "iB", "iC")
T_TOLERANCE = 1e-9
_FS_LINE = re.compile(r"^#\s*fs\s*=\s*(\S+)\s*$")
_META_LINE = re.compile(r"^#\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")


def channel_unit(name: str) -> str:
    return "V" if name.startswith("u") else "A"


def _float(text: str, line: int) -> float:
    try:
        val = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line) from None
    if not math.isfinite(val):
        raise ParseError(f"non-finite value {text!r}", line)
    return val


def read_waveform_csv(path) -> dict[str, SampledWaveform]:
    """Parse a waveform file into one :class:`SampledWaveform` per channel."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    m = _FS_LINE.match(lines[0])
    if not m:
        raise ParseError("first line must be '# fs=<Hz>'", 1)
    fs = _float(m.group(1), 1)
    if fs <= 0:
        raise ParseError("fs must be positive", 1)
    meta: dict[str, str] = {}
    k = 1
    while k < len(lines) and lines[k].startswith("#"):
        mm = _META_LINE.match(lines[k])
        if not mm:
            raise ParseError(f"malformed header line {lines[k]!r}", k + 1)
        meta[mm.group(1)] = mm.group(2)
        k += 1
    if k >= len(lines):
        raise ParseError("missing column header", k + 1)
    cols = [c.strip() for c in lines[k].split(",")]
    if not cols or cols[0] != "t":
        raise ParseError("column header must start with 't'", k + 1)
    chans = cols[1:]
    bad = [c for c in chans if c not in CHANNELS]
    if bad or len(set(chans)) != len(chans) or not chans:
        raise ParseError(f"channels must be a non-empty subset of {CHANNELS}, got {chans}", k + 1)

    rows = []
    first_row = k + 2
    for j, text in enumerate(lines[k + 1:], start=first_row):
        if not text.strip():
            raise ParseError("blank line in data", j)
        cells = text.split(",")
        if len(cells) != len(cols):
            raise ParseError(f"expected {len(cols)} cells, found {len(cells)}", j)
        rows.append([_float(c.strip(), j) for c in cells])
    if not rows:
        raise ParseError("no data rows", k + 2)
    data = np.array(rows)
    if "samples" in meta and int(meta["samples"]) != len(rows):
        raise ParseError(f"header declares {meta['samples']} samples, found {len(rows)}",
                         len(lines))

    t = data[:, 0]
    t0 = float(t[0])
    expected = t0 + np.arange(t.size) / fs
    off = np.flatnonzero(np.abs(t - expected) > T_TOLERANCE)
    if off.size:
        raise ParseError(f"timestamp {t[off[0]]!r} does not match fs={fs:g}", first_row + int(off[0]))
    return {name: SampledWaveform(fs, data[:, c + 1], t0=t0, unit=channel_unit(name))
            for c, name in enumerate(chans)}


def write_waveform_csv(path, channels: dict, fs: float | None = None, t0: float | None = None,
                       meta: dict | None = None) -> None:
    """Write channels (``SampledWaveform`` or arrays plus ``fs``) to ``path``."""
    names = [n for n in CHANNELS if n in channels]
    extra = set(channels) - set(names)
    if extra:
        raise ValueError(f"unknown channels {sorted(extra)}")
    if not names:
        raise ValueError("nothing to write")
    arrays = []
    for n in names:
        ch = channels[n]
        if isinstance(ch, SampledWaveform):
            fs = ch.fs if fs is None else fs
            t0 = ch.t0 if t0 is None else t0
            arrays.append(ch.samples)
        else:
            arrays.append(np.asarray(ch, dtype=float))
    if fs is None:
        raise ValueError("fs is required for raw arrays")
    t0 = 0.0 if t0 is None else t0
    length = {a.size for a in arrays}
    if len(length) != 1:
        raise ValueError("channels differ in length")
    n = length.pop()
    t = t0 + np.arange(n) / fs
    head = [f"# fs={fs!r}", f"# version={FORMAT_VERSION}", f"# samples={n}"]
    head += [f"# {k}={v}" for k, v in (meta or {}).items()]
    body = [",".join(["t", *names])]
    cols = np.column_stack([t, *arrays])
    body += [",".join(repr(float(v)) for v in row) for row in cols]
    Path(path).write_text("\n".join(head + body) + "\n")


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", n)
        key, val = (s.strip() for s in text.split("=", 1))
        if not key:
            raise ParseError("empty key", n)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", n)
        out[key] = val
    return out


_PARAM_FIELDS = {f.name: f.type for f in fields(TransformerParams)}


def params_from_config(cfg: dict[str, str]) -> TransformerParams:
    kw = {}
    for key, val in cfg.items():
        if key in ("tap_min", "tap_max"):
            continue
        if key not in _PARAM_FIELDS:
            raise ParseError(f"unknown transformer parameter {key!r}")
        kw[key] = val if key == "vector_group" else float(val)
    if "tap_min" in cfg or "tap_max" in cfg:
        kw["tap_range"] = (float(cfg.get("tap_min", 0.9)), float(cfg.get("tap_max", 1.1)))
    missing = [k for k in ("s_rated", "v1_rated", "v2_rated", "r1", "l1", "r2", "l2", "rm", "lm")
               if k not in kw]
    if missing:
        raise ParseError(f"missing transformer parameters {missing}")
    return TransformerParams(**kw)


PRESETS = {"sim_50kva": "sim_50kva.cfg", "field_630kva": "field_630kva.cfg"}


def load_params(source) -> TransformerParams:
    """Parameters from a config path or a preset name (``sim_50kva``/``field_630kva``)."""
    if str(source) in PRESETS:
        ref = resources.files("mvtwin.data").joinpath(PRESETS[str(source)])
        with resources.as_file(ref) as p:
            return params_from_config(read_config(p))
    return params_from_config(read_config(source))
