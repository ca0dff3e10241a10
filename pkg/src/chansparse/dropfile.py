"""Plain-text drop files.

Layout::

    #chansparse-drop 1
    #seed=2023
    #drop_index=0
    #band=subTHz
    #mode=ick
    #has_los=1
    #table=rays
    delay_s	power_linear	aoa_az_deg	aoa_el_deg	is_los	cluster
    0.0	0.9731...	0.0	0.0	1	0
    ...

Metadata lines are ``#key=value``. Each ``#table=NAME`` line starts a
tab-separated table whose first row names the columns. ``rays`` tables hold
one ray per row (``cluster`` is optional, -1 marks a stand-alone specular
ray). ``cir`` tables hold measured taps, one row per pointing and tap:
``az_deg el_deg tap re im``; they need ``sample_interval_s`` and ``n_taps``
in the metadata. A file with both tables is a measurement with its truth.
Floats are written with ``repr`` so write -> read -> write is byte-identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .extraction import Cir
from .types import ChannelRealization, Ray

MAGIC = "#chansparse-drop"
FORMAT_VERSION = 1
RAY_COLUMNS = ("delay_s", "power_linear", "aoa_az_deg", "aoa_el_deg", "is_los")
CIR_COLUMNS = ("az_deg", "el_deg", "tap", "re", "im")
META_ORDER = ("kind", "seed", "drop_index", "band", "mode", "has_los", "sample_interval_s", "n_taps")


class DropFileError(ValueError):
    def __init__(self, path, line: int | None, fld: str, msg: str) -> None:
        where = f"{path}" + (f":{line}" if line is not None else "")
        super().__init__(f"{where}: field {fld!r}: {msg}")
        self.path, self.line, self.field = path, line, fld


@dataclass
class DropFile:
    meta: dict[str, str] = field(default_factory=dict)
    realization: ChannelRealization | None = None
    cirs: list[Cir] | None = None

    @property
    def has_truth(self) -> bool:
        return self.realization is not None


def drop_name(index: int) -> str:
    return f"drop_{index:06d}.txt"


def _meta_lines(meta: dict[str, str]) -> list[str]:
    keys = [k for k in META_ORDER if k in meta] + sorted(k for k in meta if k not in META_ORDER)
    return [f"#{k}={meta[k]}" for k in keys]


def format_drop(
    realization: ChannelRealization | None = None,
    cirs: Sequence[Cir] | None = None,
    extra_meta: dict[str, str] | None = None,
) -> str:
    if realization is None and not cirs:
        raise ValueError("nothing to write")
    meta: dict[str, str] = {}
    if realization is not None:
        meta.update(
            kind="rays" if not cirs else "cir+rays",
            seed=str(realization.seed),
            drop_index=str(realization.drop_index),
            band=realization.band,
            mode=realization.mode,
            has_los=str(int(realization.has_los)),
        )
    else:
        meta["kind"] = "cir"
    if cirs:
        meta["sample_interval_s"] = repr(float(cirs[0].sample_interval))
        meta["n_taps"] = str(cirs[0].taps.size)
    meta.update(extra_meta or {})
    lines = [f"{MAGIC} {FORMAT_VERSION}", *_meta_lines(meta)]
    if realization is not None:
        ids = realization.cluster_ids
        cols = RAY_COLUMNS + (("cluster",) if ids is not None else ())
        lines += ["#table=rays", "\t".join(cols)]
        for k, r in enumerate(realization.rays):
            row = [repr(float(r.delay)), repr(float(r.power)), repr(float(r.aoa_az)), repr(float(r.aoa_el)), str(int(r.is_los))]
            if ids is not None:
                row.append(str(ids[k]))
            lines.append("\t".join(row))
    if cirs:
        lines += ["#table=cir", "\t".join(CIR_COLUMNS)]
        for c in cirs:
            a, e = repr(float(c.angle[0])), repr(float(c.angle[1]))
            for t in np.flatnonzero(c.taps):
                v = c.taps[t]
                lines.append(f"{a}\t{e}\t{t}\t{float(v.real)!r}\t{float(v.imag)!r}")
    return "\n".join(lines) + "\n"


def _num(path, line, fld, text, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise DropFileError(path, line, fld, f"cannot parse {text!r}") from None


def parse_drop(text: str, path: str | Path = "<string>") -> DropFile:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MAGIC):
        raise DropFileError(path, 1, "format_version", "missing drop file header")
    ver = _num(path, 1, "format_version", lines[0][len(MAGIC):].strip(), int)
    if ver != FORMAT_VERSION:
        raise DropFileError(path, 1, "format_version", f"unsupported version {ver}")
    meta: dict[str, str] = {}
    tables: dict[str, tuple[list[str], list[tuple[int, list[str]]]]] = {}
    current: str | None = None
    expect_header = False
    for ln, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        if raw.startswith("#"):
            key, sep, val = raw[1:].partition("=")
            if not sep:
                raise DropFileError(path, ln, raw[1:], "expected key=value")
            if key == "table":
                if val not in ("rays", "cir"):
                    raise DropFileError(path, ln, "table", f"unknown table {val!r}")
                if val in tables:
                    raise DropFileError(path, ln, "table", f"duplicate table {val!r}")
                current, expect_header = val, True
                tables[val] = ([], [])
            else:
                meta[key] = val
            continue
        if current is None:
            raise DropFileError(path, ln, "table", "data before any #table line")
        cells = raw.split("\t")
        if expect_header:
            tables[current][0].extend(cells)
            expect_header = False
        else:
            tables[current][1].append((ln, cells))

    out = DropFile(meta)
    if "rays" in tables:
        out.realization = _parse_rays(path, meta, *tables["rays"])
    if "cir" in tables:
        out.cirs = _parse_cir(path, meta, *tables["cir"])
    if out.realization is None and out.cirs is None:
        raise DropFileError(path, None, "table", "no rays or cir table")
    return out


def _need(path, meta, key):
    if key not in meta:
        raise DropFileError(path, None, key, "missing")
    return meta[key]


def _check_columns(path, header, required, optional=()):
    missing = [c for c in required if c not in header]
    if missing:
        raise DropFileError(path, None, missing[0], "column missing")
    extra = [c for c in header if c not in required and c not in optional]
    if extra:
        raise DropFileError(path, None, extra[0], "unknown column")


def _parse_rays(path, meta, header, rows) -> ChannelRealization:
    _check_columns(path, header, RAY_COLUMNS, ("cluster",))
    col = {c: header.index(c) for c in header}
    rays: list[Ray] = []
    ids: list[int] = []
    for ln, cells in rows:
        if len(cells) != len(header):
            raise DropFileError(path, ln, "row", f"expected {len(header)} fields, got {len(cells)}")
        vals = {c: cells[i] for c, i in col.items()}
        flag = vals["is_los"]
        if flag not in ("0", "1"):
            raise DropFileError(path, ln, "is_los", f"expected 0 or 1, got {flag!r}")
        try:
            rays.append(
                Ray(
                    _num(path, ln, "delay_s", vals["delay_s"]),
                    _num(path, ln, "power_linear", vals["power_linear"]),
                    _num(path, ln, "aoa_az_deg", vals["aoa_az_deg"]),
                    _num(path, ln, "aoa_el_deg", vals["aoa_el_deg"]),
                    flag == "1",
                )
            )
        except DropFileError:
            raise
        except ValueError as e:
            fld = "power_linear" if "power" in str(e) else "delay_s"
            raise DropFileError(path, ln, fld, str(e)) from None
        if "cluster" in col:
            ids.append(_num(path, ln, "cluster", vals["cluster"], int))
    if not rays:
        raise DropFileError(path, None, "rays", "table is empty")
    has_los = _need(path, meta, "has_los")
    if has_los not in ("0", "1"):
        raise DropFileError(path, None, "has_los", f"expected 0 or 1, got {has_los!r}")
    try:
        return ChannelRealization(
            tuple(rays),
            _need(path, meta, "band"),
            has_los == "1",
            _num(path, None, "seed", _need(path, meta, "seed"), int),
            _need(path, meta, "mode"),
            _num(path, None, "drop_index", meta.get("drop_index", "0"), int),
            cluster_ids=tuple(ids) if "cluster" in col else None,
        )
    except ValueError as e:
        msg = str(e)
        fld = "mode" if "mode" in msg else "seed" if "seed" in msg else "has_los" if "LoS" in msg or "has_los" in msg else "rays"
        raise DropFileError(path, None, fld, msg) from None


def _parse_cir(path, meta, header, rows) -> list[Cir]:
    _check_columns(path, header, CIR_COLUMNS)
    col = {c: header.index(c) for c in header}
    dt = _num(path, None, "sample_interval_s", _need(path, meta, "sample_interval_s"))
    n = _num(path, None, "n_taps", _need(path, meta, "n_taps"), int)
    if n < 1 or not dt > 0:
        raise DropFileError(path, None, "n_taps" if n < 1 else "sample_interval_s", "must be positive")
    taps: dict[tuple[float, float], np.ndarray] = {}
    for ln, cells in rows:
        if len(cells) != len(header):
            raise DropFileError(path, ln, "row", f"expected {len(header)} fields, got {len(cells)}")
        v = {c: cells[i] for c, i in col.items()}
        key = (_num(path, ln, "az_deg", v["az_deg"]), _num(path, ln, "el_deg", v["el_deg"]))
        t = _num(path, ln, "tap", v["tap"], int)
        if not 0 <= t < n:
            raise DropFileError(path, ln, "tap", f"index {t} outside [0, {n})")
        arr = taps.setdefault(key, np.zeros(n, dtype=np.complex128))
        arr[t] = complex(_num(path, ln, "re", v["re"]), _num(path, ln, "im", v["im"]))
    if not taps:
        raise DropFileError(path, None, "cir", "table is empty")
    return [Cir(a, dt, k) for k, a in taps.items()]


def write_drop(path: str | Path, realization=None, cirs=None, extra_meta=None) -> Path:
    p = Path(path)
    p.write_text(format_drop(realization, cirs, extra_meta), encoding="utf-8")
    return p


def read_drop(path: str | Path) -> DropFile:
    p = Path(path)
    return parse_drop(p.read_text(encoding="utf-8"), p)


def list_drop_files(paths: Sequence[str | Path]) -> list[Path]:
    """Expand directories to their ``*.txt`` files (sorted); keep files as given."""
    out: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            out.extend(sorted(q for q in p.glob("*.txt") if q.is_file()))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"{p}: no such file or directory")
    return out
