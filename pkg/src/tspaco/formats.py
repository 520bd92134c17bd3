"""Instance files: a plain ``matrix`` format and a small TSPLIB subset."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .core import InstanceError, TspInstance

MATRIX = "matrix"
TSPLIB = "tsplib"

_TSPLIB_KEYS = {
    "NAME",
    "COMMENT",
    "TYPE",
    "DIMENSION",
    "EDGE_WEIGHT_TYPE",
    "EDGE_WEIGHT_FORMAT",
    "DISPLAY_DATA_TYPE",
}
_TSPLIB_SECTIONS = {"NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION"}


class FormatError(ValueError):
    """Unreadable or invalid instance file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


def _parse_float(tok: str, path, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise FormatError(f"not a number: {tok!r}", path, lineno) from None
    if not math.isfinite(v):
        raise FormatError(f"non-finite value: {tok!r}", path, lineno)
    return v


def _build(weights: np.ndarray, name: str | None, path) -> TspInstance:
    try:
        return TspInstance(weights, name=name)
    except InstanceError as exc:
        raise FormatError(str(exc), path) from exc


def parse_matrix(text: str, path=None, name: str | None = None) -> TspInstance:
    """Header line ``n`` followed by ``n`` rows of ``n`` whitespace-separated reals.

    Blank lines and ``#`` comments are ignored.
    """
    lines = [
        (i, ln.split("#", 1)[0].strip())
        for i, ln in enumerate(text.splitlines(), start=1)
    ]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise FormatError("empty file", path)
    lineno, header = lines[0]
    try:
        n = int(header)
    except ValueError:
        raise FormatError(f"expected node count, got {header!r}", path, lineno) from None
    if n < 2:
        raise FormatError(f"node count must be >= 2, got {n}", path, lineno)
    rows = lines[1:]
    if len(rows) != n:
        raise FormatError(f"expected {n} matrix rows, found {len(rows)}", path)
    w = np.empty((n, n))
    for r, (lineno, ln) in enumerate(rows):
        toks = ln.split()
        if len(toks) != n:
            raise FormatError(f"row {r} has {len(toks)} entries, expected {n}", path, lineno)
        w[r] = [_parse_float(t, path, lineno) for t in toks]
    return _build(w, name, path)


def _nint(x: float) -> int:
    return int(x + 0.5)


def parse_tsplib(text: str, path=None) -> TspInstance:
    """TYPE TSP with EDGE_WEIGHT_TYPE EUC_2D, or EXPLICIT with FULL_MATRIX weights."""
    header: dict[str, str] = {}
    coords: list[tuple[float, float]] = []
    explicit: list[float] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        first = line.split()[0]
        if not _looks_numeric(first):
            key, _, value = line.partition(":")
            key = key.strip().upper()
            if key in _TSPLIB_SECTIONS:
                section = key
            elif key in _TSPLIB_KEYS:
                header[key] = value.strip()
                section = None
            else:
                raise FormatError(f"unsupported TSPLIB keyword {key}", path, lineno)
            continue
        if section is None:
            raise FormatError("data outside of a section", path, lineno)
        toks = line.split()
        if section == "NODE_COORD_SECTION":
            if len(toks) != 3:
                raise FormatError("coordinate line needs: index x y", path, lineno)
            coords.append((_parse_float(toks[1], path, lineno), _parse_float(toks[2], path, lineno)))
        else:
            explicit.extend(_parse_float(t, path, lineno) for t in toks)

    kind = header.get("TYPE", "").split()[0].upper() if header.get("TYPE") else ""
    if kind != "TSP":
        raise FormatError(f"unsupported TYPE {header.get('TYPE')!r} (only TSP)", path)
    if "DIMENSION" not in header:
        raise FormatError("missing DIMENSION", path)
    try:
        n = int(header["DIMENSION"])
    except ValueError:
        raise FormatError(f"bad DIMENSION {header['DIMENSION']!r}", path) from None
    ewt = header.get("EDGE_WEIGHT_TYPE", "").upper()
    if ewt == "EUC_2D":
        if len(coords) != n:
            raise FormatError(f"expected {n} coordinates, found {len(coords)}", path)
        pts = np.array(coords)
        w = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d = _nint(math.hypot(pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1]))
                w[i, j] = w[j, i] = d
    elif ewt == "EXPLICIT":
        fmt = header.get("EDGE_WEIGHT_FORMAT", "").upper()
        if fmt != "FULL_MATRIX":
            raise FormatError(f"unsupported EDGE_WEIGHT_FORMAT {fmt or '(missing)'}", path)
        if len(explicit) != n * n:
            raise FormatError(f"expected {n * n} edge weights, found {len(explicit)}", path)
        w = np.array(explicit).reshape(n, n)
    else:
        raise FormatError(f"unsupported EDGE_WEIGHT_TYPE {ewt or '(missing)'}", path)
    return _build(w, header.get("NAME"), path)


def _looks_numeric(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def detect_format(path: str | Path, text: str | None = None) -> str:
    p = Path(path)
    if p.suffix.lower() == ".tsp":
        return TSPLIB
    head = (p.read_text() if text is None else text).lstrip().split(None, 1)
    if head and not _looks_numeric(head[0]):
        return TSPLIB
    return MATRIX


def load_instance(path: str | Path, format: str | None = None) -> TspInstance:
    """Read an instance; ``format`` is ``"matrix"``, ``"tsplib"`` or ``None`` to detect."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", p) from exc
    fmt = format or detect_format(p, text)
    if fmt == MATRIX:
        return parse_matrix(text, p, name=p.stem)
    if fmt == TSPLIB:
        return parse_tsplib(text, p)
    raise ValueError(f"unknown instance format {fmt!r}")


def format_matrix(instance: TspInstance) -> str:
    rows = [" ".join(repr(float(v)) for v in row) for row in instance.weights]
    return "\n".join([str(instance.n), *rows]) + "\n"


def save_instance(instance: TspInstance, path: str | Path) -> Path:
    """Write ``matrix`` format with round-trip exact floats."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(format_matrix(instance))
    return p
