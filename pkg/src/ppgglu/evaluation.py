"""Regression metrics, Clarke Error Grid zones and report rendering."""
import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantReference,
    EmptyInput,
    InputError,
    OutOfPhysiologicalRange,
    UnsupportedFormat,
    ZeroReference,
)

ZONES = ("A", "B", "C", "D", "E")
METRICS_HEADER = ["mae_mgdl", "mape_pct", "r2", "rmse_mgdl"]
CEG_HEADER = ["zone", "count", "percent"]


@dataclass(frozen=True)
class MetricsReport:
    mae_mgdl: float
    mse_mgdl2: float
    rmse_mgdl: float
    mape_percent: float
    r2: float


@dataclass(frozen=True)
class CegSummary:
    counts: dict
    percents: dict
    n: int
    refs: tuple = ()
    preds: tuple = ()


def _pair(refs, preds):
    r = np.asarray(refs, dtype=np.float64).ravel()
    p = np.asarray(preds, dtype=np.float64).ravel()
    if r.size == 0 or p.size == 0:
        raise EmptyInput("metrics need at least one (reference, prediction) pair")
    if r.shape != p.shape:
        raise InputError(f"{r.size} references vs {p.size} predictions")
    return r, p


def compute_metrics_basic(refs, preds):
    """MAE, MSE and RMSE only; defined for any non-empty input."""
    r, p = _pair(refs, preds)
    e = p - r
    mse = float(np.mean(e * e))
    return {"mae": float(np.mean(np.abs(e))), "mse": mse, "rmse": float(np.sqrt(mse))}


def compute_metrics(refs, preds):
    r, p = _pair(refs, preds)
    basic = compute_metrics_basic(r, p)
    if np.any(r <= 0):
        raise ZeroReference("MAPE is undefined for non-positive reference values")
    e = p - r
    ss_tot = float(np.sum((r - r.mean()) ** 2))
    if ss_tot == 0.0:
        exc = ConstantReference("R^2 is undefined when every reference value is equal")
        exc.partial = basic
        raise exc
    return MetricsReport(
        mae_mgdl=basic["mae"],
        mse_mgdl2=basic["mse"],
        rmse_mgdl=basic["rmse"],
        mape_percent=float(100.0 * np.mean(np.abs(e / r))),
        r2=float(1.0 - np.sum(e * e) / ss_tot),
    )


# ---------------------------------------------------------------------------
# Clarke Error Grid
#
# Rules, first match wins (comparisons cross-multiplied so integer inputs are
# classified exactly):
#   A  ref <= 70 and pred <= 70, or |pred - ref| <= ref / 5
#   E  ref >= 180 and pred <= 70, or ref <= 70 and pred >= 180
#   C  70 <= ref <= 290 and pred >= ref + 110, or
#      130 <= ref <= 180 and pred <= 7/5 ref - 182
#   D  ref >= 240 and 70 <= pred <= 180, or ref <= 175/3 and 70 <= pred <= 180,
#      or 175/3 <= ref <= 70 and pred >= 6/5 ref
#   B  everything else

def _check_range(ref, pred):
    if not (0 < ref <= 600 and 0 < pred <= 600):
        raise OutOfPhysiologicalRange(f"CEG needs values in (0, 600] mg/dL, got ref={ref}, pred={pred}")


def ceg_zone(ref, pred):
    _check_range(ref, pred)
    if (ref <= 70 and pred <= 70) or 5 * abs(pred - ref) <= ref:
        return "A"
    if (ref >= 180 and pred <= 70) or (ref <= 70 and pred >= 180):
        return "E"
    if (70 <= ref <= 290 and pred >= ref + 110) or (130 <= ref <= 180 and 5 * pred <= 7 * ref - 910):
        return "C"
    if ((ref >= 240 and 70 <= pred <= 180)
            or (3 * ref <= 175 and 70 <= pred <= 180)
            or (175 <= 3 * ref and ref <= 70 and 5 * pred >= 6 * ref)):
        return "D"
    return "B"


def ceg_zones(refs, preds):
    """Vectorised :func:`ceg_zone`; returns an array of zone letters."""
    r, p = _pair(refs, preds)
    if np.any((r <= 0) | (r > 600) | (p <= 0) | (p > 600)):
        raise OutOfPhysiologicalRange("CEG needs values in (0, 600] mg/dL")
    a = ((r <= 70) & (p <= 70)) | (5 * np.abs(p - r) <= r)
    e = ((r >= 180) & (p <= 70)) | ((r <= 70) & (p >= 180))
    c = (((r >= 70) & (r <= 290) & (p >= r + 110))
         | ((r >= 130) & (r <= 180) & (5 * p <= 7 * r - 910)))
    d = (((r >= 240) & (p >= 70) & (p <= 180))
         | ((3 * r <= 175) & (p >= 70) & (p <= 180))
         | ((3 * r >= 175) & (r <= 70) & (5 * p >= 6 * r)))
    return np.select([a, e, c, d], ["A", "E", "C", "D"], default="B")


def ceg_summary(refs, preds):
    r, p = _pair(refs, preds)
    zones = ceg_zones(r, p)
    counts = {z: int(np.sum(zones == z)) for z in ZONES}
    n = len(zones)
    percents = {z: 100.0 * counts[z] / n for z in ZONES}
    return CegSummary(counts, percents, n, tuple(r.tolist()), tuple(p.tolist()))


# ---------------------------------------------------------------------------
# reports

def metrics_row(m):
    return [repr(m.mae_mgdl), repr(m.mape_percent), repr(m.r2), repr(m.rmse_mgdl)]


def _csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def metrics_csv(m):
    return _csv([METRICS_HEADER, metrics_row(m)])


def ceg_csv(s):
    return _csv([CEG_HEADER] + [[z, s.counts[z], f"{s.percents[z]:.1f}"] for z in ZONES])


def folds_csv(folds):
    return _csv([["fold", "mae", "rmse"]] + [[f.fold_index, repr(f.mae), repr(f.rmse)] for f in folds])


def metrics_text(m):
    return (f"MAE (mg/dL): {m.mae_mgdl:.2f}\n"
            f"MAPE (%): {m.mape_percent:.2f}\n"
            f"R2 Score: {m.r2:.2f}\n"
            f"RMSE (mg/dL): {m.rmse_mgdl:.2f}\n")


def ceg_text(s):
    lines = [f"Clarke Error Grid ({s.n} points)"]
    lines += [f"Zone {z}: {s.counts[z]} ({s.percents[z]:.1f}%)" for z in ZONES]
    return "\n".join(lines) + "\n"


def folds_text(folds):
    """Per-fold table; ``*`` marks the smallest MAE and the smallest RMSE."""
    mae = np.array([f.mae for f in folds])
    rmse = np.array([f.rmse for f in folds])
    best_mae, best_rmse = int(np.argmin(mae)), int(np.argmin(rmse))
    lines = [f"{'Fold No.':>8} | {'MAE (mg/dL)':>12} | {'RMSE (mg/dL)':>12}"]
    for i, f in enumerate(folds):
        a = f"{f.mae:.4f}" + ("*" if i == best_mae else " ")
        b = f"{f.rmse:.4f}" + ("*" if i == best_rmse else " ")
        lines.append(f"{f.fold_index:>8} | {a:>12} | {b:>12}")
    for label, fn in (("mean", np.mean), ("min", np.min), ("max", np.max)):
        lines.append(f"{label:>8} | {fn(mae):>11.4f}  | {fn(rmse):>11.4f} ")
    return "\n".join(lines) + "\n"


# Clarke grid boundary segments in mg/dL, (x0, y0, x1, y1)
CEG_LINES = (
    (0, 70, 175 / 3, 70),
    (175 / 3, 70, 400 / 1.2, 400),
    (70, 84, 70, 400),
    (0, 180, 70, 180),
    (70, 180, 290, 400),
    (70, 0, 70, 56),
    (70, 56, 400, 320),
    (180, 0, 180, 70),
    (180, 70, 400, 70),
    (240, 70, 240, 180),
    (240, 180, 400, 180),
    (130, 0, 180, 70),
)
SVG_SIZE = 600
SVG_MARGIN = 50
AXIS_MAX = 400.0


def to_px(ref, pred):
    span = SVG_SIZE - 2 * SVG_MARGIN
    x = SVG_MARGIN + ref / AXIS_MAX * span
    y = SVG_SIZE - SVG_MARGIN - pred / AXIS_MAX * span
    return x, y


def from_px(x, y):
    span = SVG_SIZE - 2 * SVG_MARGIN
    return (x - SVG_MARGIN) / span * AXIS_MAX, (SVG_SIZE - SVG_MARGIN - y) / span * AXIS_MAX


def ceg_svg(s):
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_SIZE}" height="{SVG_SIZE}" '
        f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        '<rect x="0" y="0" width="600" height="600" fill="white"/>',
    ]
    x0, y0 = to_px(0, 0)
    x1, y1 = to_px(AXIS_MAX, AXIS_MAX)
    out.append(f'<rect class="frame" x="{x0:g}" y="{y1:g}" width="{x1 - x0:g}" height="{y0 - y1:g}" '
               'fill="none" stroke="black"/>')
    out.append(f'<line class="identity" x1="{x0:g}" y1="{y0:g}" x2="{x1:g}" y2="{y1:g}" '
               'stroke="gray" stroke-dasharray="2,3"/>')
    for a, b, c, d in CEG_LINES:
        (px0, py0), (px1, py1) = to_px(a, b), to_px(c, d)
        out.append(f'<polyline class="zone-boundary" points="{px0:.3f},{py0:.3f} {px1:.3f},{py1:.3f}" '
                   'fill="none" stroke="black"/>')
    for v in range(0, 401, 50):
        px, _ = to_px(v, 0)
        _, py = to_px(0, v)
        out.append(f'<text x="{px:g}" y="{y0 + 18:g}" font-size="11" text-anchor="middle">{v}</text>')
        out.append(f'<text x="{x0 - 6:g}" y="{py + 4:g}" font-size="11" text-anchor="end">{v}</text>')
    for label, (lx, ly) in {"A": (30, 15), "B": (370, 260), "C": (160, 370), "D": (380, 120),
                            "E": (160, 15)}.items():
        px, py = to_px(lx, ly)
        out.append(f'<text class="zone-label" x="{px:g}" y="{py:g}" font-size="15">{label}</text>')
        if label == "B":
            px, py = to_px(260, 370)
            out.append(f'<text class="zone-label" x="{px:g}" y="{py:g}" font-size="15">B</text>')
    out.append(f'<text x="{SVG_SIZE / 2:g}" y="{SVG_SIZE - 10}" font-size="13" text-anchor="middle">'
               'Reference glucose (mg/dL)</text>')
    out.append(f'<text x="14" y="{SVG_SIZE / 2:g}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 14 {SVG_SIZE / 2:g})">Predicted glucose (mg/dL)</text>')
    for r, p in zip(s.refs, s.preds):
        px, py = to_px(min(r, AXIS_MAX), min(p, AXIS_MAX))
        out.append(f'<circle class="point" cx="{px:.3f}" cy="{py:.3f}" r="3" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_report(metrics=None, ceg=None, folds=None, fmt="text"):
    if metrics is None and ceg is None and not folds:
        raise InputError("render_report needs at least one section")
    if fmt == "text":
        parts = []
        if metrics is not None:
            parts.append(metrics_text(metrics))
        if ceg is not None:
            parts.append(ceg_text(ceg))
        if folds:
            parts.append(folds_text(folds))
        return "\n".join(parts).encode("utf-8")
    if fmt == "csv":
        parts = []
        if metrics is not None:
            parts.append(metrics_csv(metrics))
        if ceg is not None:
            parts.append(ceg_csv(ceg))
        if folds:
            parts.append(folds_csv(folds))
        return "\n".join(parts).encode("utf-8")
    if fmt == "svg":
        if ceg is None:
            raise UnsupportedFormat("svg output renders the Clarke grid and needs a CEG section")
        return ceg_svg(ceg).encode("utf-8")
    raise UnsupportedFormat(f"unsupported report format {fmt!r}")
