"""Report serialisation: canonical JSON, CSV and atomic file writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

from .errors import SchemaError

SCHEMA_VERSION = 1


def _clean(obj):
    """Turn numpy scalars/tuples into plain JSON values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def atomic_write(path, text: str) -> Path:
    """Write via a temporary file in the target directory, then rename over."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_report(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: missing or unsupported schema_version")
    return doc


def report_series(doc: dict) -> list[tuple[str, list[float], list[float]]]:
    """(label, x, y) series of a convergence or localisation report."""
    kind = doc.get("kind")
    out = []
    if kind == "localization":
        out.append(("E", doc["r"], doc["E"]))
        if doc.get("Eprime") is not None:
            out.append(("E'", doc["r"], doc["Eprime"]))
    elif kind == "convergence":
        out.append((doc.get("label", "error"), doc["grid"], doc["errors"]))
    elif kind == "experiment":
        for s in doc.get("series", []):
            out.extend(report_series(s))
    else:
        raise SchemaError(f"report kind {kind!r} has no plottable series")
    out = [(lab, list(map(float, x)), list(map(float, y))) for lab, x, y in out if len(x)]
    if not out:
        raise SchemaError("report has no non-empty series")
    for lab, x, y in out:
        if len(x) != len(y):
            raise SchemaError(f"series {lab!r}: x and y lengths differ")
    return out


_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_svg(series, log_y: bool = False, title: str = "", width: int = 640, height: int = 420) -> str:
    """Minimal SVG line chart, one polyline per series."""
    if not series:
        raise SchemaError("nothing to plot")
    left, right, top, bottom = 70, 20, 30, 50
    xs = [v for _, x, _ in series for v in x]
    ys = [v for _, _, y in series for v in y]
    if log_y:
        ys = [v for v in ys if v > 0]
        if not ys:
            raise SchemaError("log scale needs positive values")

    def fy(v):
        return math.log10(v) if log_y else v

    x0, x1 = min(xs), max(xs)
    y0, y1 = min(map(fy, ys)), max(map(fy, ys))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(v):
        return left + (v - x0) / (x1 - x0) * (width - left - right)

    def py(v):
        return top + (y1 - fy(v)) / (y1 - y0) * (height - top - bottom)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{top - 10}" text-anchor="middle" font-size="14">{_esc(title)}</text>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        ylab = f"1e{yv:.1f}" if log_y else f"{yv:.3g}"
        parts.append(f'<text x="{px(xv):.1f}" y="{height - bottom + 18}" text-anchor="middle" font-size="11">{xv:.3g}</text>')
        ypix = top + (y1 - yv) / (y1 - y0) * (height - top - bottom)
        parts.append(f'<text x="{left - 6}" y="{ypix + 4:.1f}" text-anchor="end" font-size="11">{ylab}</text>')
    for i, (label, x, y) in enumerate(series):
        colour = _COLOURS[i % len(_COLOURS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y) if not (log_y and b <= 0))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{pts}"/>')
        parts.append(f'<text x="{width - right - 4}" y="{top + 16 * (i + 1)}" text-anchor="end" font-size="12" fill="{colour}">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
