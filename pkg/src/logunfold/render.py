"""SVG output: joint maps with endorsement circles and variable axes, plus
diagnostic panels (local optima strips, component-plus-residual grids,
influence plots, paired boxplots).

Rendering is pure string building with fixed-precision coordinates, so the
same inputs and seed always produce byte-identical documents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .dataset import PredictorSet
from .errors import DataError
from .geometry import SupervisedUnfoldingMap, UnfoldingMap

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)

STYLE = {
    "font_family": "Helvetica, Arial, sans-serif",
    "font_size": 11,
    "title_size": 13,
    "background": "#ffffff",
    "frame": "#444444",
    "grid": "#dddddd",
    "item_color": "#d62728",
    "person_color": "#1f77b4",
    "circle_fill": "#1f77b4",
    "circle_opacity": 0.10,
    "axis_color": "#555555",
    "padding_frac": 0.05,
}


@dataclass
class RenderOptions:
    width: int = 720
    height: int = 720
    show_profile_labels: bool = False
    show_persons: bool = True


def _f(x: float) -> str:
    return f"{x:.2f}"


def _text(x, y, s, size=None, anchor="middle", color="#000000") -> str:
    size = size or STYLE["font_size"]
    return (
        f'<text x="{_f(x)}" y="{_f(y)}" font-family="{STYLE["font_family"]}" '
        f'font-size="{size}" text-anchor="{anchor}" fill="{color}">{escape(str(s))}</text>'
    )


def _document(width, height, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="{STYLE["background"]}"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


class _Frame:
    """Data-to-screen transform for one plotting area."""

    def __init__(self, x0, y0, w, h, xlim, ylim, equal_aspect=False):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        xlo, xhi = xlim
        ylo, yhi = ylim
        if xhi <= xlo:
            xhi = xlo + 1.0
        if yhi <= ylo:
            yhi = ylo + 1.0
        if equal_aspect:
            sx = w / (xhi - xlo)
            sy = h / (yhi - ylo)
            s = min(sx, sy)
            cx, cy = (xlo + xhi) / 2.0, (ylo + yhi) / 2.0
            half_w = w / (2.0 * s)
            half_h = h / (2.0 * s)
            xlo, xhi = cx - half_w, cx + half_w
            ylo, yhi = cy - half_h, cy + half_h
        self.xlim = (xlo, xhi)
        self.ylim = (ylo, yhi)

    def sx(self, x):
        xlo, xhi = self.xlim
        return self.x0 + (x - xlo) / (xhi - xlo) * self.w

    def sy(self, y):
        ylo, yhi = self.ylim
        return self.y0 + self.h - (y - ylo) / (yhi - ylo) * self.h

    @property
    def scale_x(self):
        return self.w / (self.xlim[1] - self.xlim[0])

    def frame_rect(self) -> str:
        return (
            f'<rect x="{_f(self.x0)}" y="{_f(self.y0)}" width="{_f(self.w)}" '
            f'height="{_f(self.h)}" fill="none" stroke="{STYLE["frame"]}" stroke-width="1"/>'
        )

    def clip_line(self, p, q):
        """Liang-Barsky clip of segment p-q (data coords) to the frame."""
        (x1, y1), (x2, y2) = p, q
        dx, dy = x2 - x1, y2 - y1
        t0, t1 = 0.0, 1.0
        for num, den in (
            (self.xlim[0] - x1, dx),
            (x1 - self.xlim[1], -dx),
            (self.ylim[0] - y1, dy),
            (y1 - self.ylim[1], -dy),
        ):
            if den == 0:
                if num > 0:
                    return None
                continue
            t = num / den
            if den > 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
        if t0 > t1:
            return None
        return (x1 + t0 * dx, y1 + t0 * dy), (x1 + t1 * dx, y1 + t1 * dy)


def _nice_ticks(lo, hi, target=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 else t)
        t += step
    return ticks


def _tick_label(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:.4g}"


def _axes(fr: _Frame, x_label="", y_label="") -> list[str]:
    parts = [fr.frame_rect()]
    for t in _nice_ticks(*fr.xlim):
        x = fr.sx(t)
        parts.append(
            f'<line x1="{_f(x)}" y1="{_f(fr.y0 + fr.h)}" x2="{_f(x)}" '
            f'y2="{_f(fr.y0 + fr.h + 4)}" stroke="{STYLE["frame"]}" stroke-width="1"/>'
        )
        parts.append(_text(x, fr.y0 + fr.h + 16, _tick_label(t), size=9))
    for t in _nice_ticks(*fr.ylim):
        y = fr.sy(t)
        parts.append(
            f'<line x1="{_f(fr.x0 - 4)}" y1="{_f(y)}" x2="{_f(fr.x0)}" '
            f'y2="{_f(y)}" stroke="{STYLE["frame"]}" stroke-width="1"/>'
        )
        parts.append(_text(fr.x0 - 7, y + 3, _tick_label(t), size=9, anchor="end"))
    if x_label:
        parts.append(_text(fr.x0 + fr.w / 2, fr.y0 + fr.h + 30, x_label, size=10))
    if y_label:
        parts.append(
            f'<g transform="translate({_f(fr.x0 - 34)},{_f(fr.y0 + fr.h / 2)}) rotate(-90)">'
            + _text(0, 0, y_label, size=10)
            + "</g>"
        )
    return parts


def _coords_2d(M: np.ndarray) -> np.ndarray:
    """First two columns; one-dimensional maps get a zero second axis."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] >= 2:
        return M[:, :2]
    return np.hstack([M, np.zeros((M.shape[0], 1))])


def render_map(
    map_,
    dataset=None,
    predictors: PredictorSet | None = None,
    options: RenderOptions | None = None,
) -> str:
    """Joint map: item points with endorsement circles (radius = offset,
    drawn only for positive offsets), person points, and, for supervised
    maps, one labeled axis per predictor (solid inside the observed range,
    dotted beyond)."""
    opt = options or RenderOptions()
    supervised = isinstance(map_, SupervisedUnfoldingMap)
    if supervised:
        if predictors is None:
            raise DataError("rendering a supervised map needs the predictors")
        U = map_.person_coordinates(predictors.X)
    elif isinstance(map_, UnfoldingMap):
        U = map_.U
    else:
        raise DataError(f"cannot render object of type {type(map_).__name__}")
    if U.size == 0 or map_.V.size == 0:
        raise DataError("cannot render an empty configuration")

    U2 = _coords_2d(U)
    V2 = _coords_2d(map_.V)
    per_item = map_.offset_variant in ("per_item", "shared")
    radii = np.asarray(map_.m, dtype=float) if per_item else np.zeros(V2.shape[0])

    xs = [U2[:, 0], V2[:, 0]]
    ys = [U2[:, 1], V2[:, 1]]
    for r, (vx, vy) in enumerate(V2):
        if per_item and radii[r] > 0:
            xs.append(np.array([vx - radii[r], vx + radii[r]]))
            ys.append(np.array([vy - radii[r], vy + radii[r]]))
    allx = np.concatenate(xs)
    ally = np.concatenate(ys)
    span = max(allx.max() - allx.min(), ally.max() - ally.min(), 1e-9)
    pad = STYLE["padding_frac"] * span
    margin = 40
    fr = _Frame(
        margin,
        margin,
        opt.width - 2 * margin,
        opt.height - 2 * margin,
        (allx.min() - pad, allx.max() + pad),
        (ally.min() - pad, ally.max() + pad),
        equal_aspect=True,
    )
    body = [fr.frame_rect()]

    # endorsement regions: cumulative translucent fill darkens overlaps
    for r, (vx, vy) in enumerate(V2):
        if per_item and radii[r] > 0:
            body.append(
                f'<circle cx="{_f(fr.sx(vx))}" cy="{_f(fr.sy(vy))}" '
                f'r="{_f(radii[r] * fr.scale_x)}" fill="{STYLE["circle_fill"]}" '
                f'fill-opacity="{STYLE["circle_opacity"]}" '
                f'stroke="{STYLE["circle_fill"]}" stroke-width="1"/>'
            )

    if supervised:
        body.extend(_variable_axes(map_, predictors, fr))

    if opt.show_persons:
        labels = getattr(map_, "profile_labels", None) or (
            dataset.profile_labels if dataset is not None else None
        )
        for i, (ux, uy) in enumerate(U2):
            body.append(
                f'<circle cx="{_f(fr.sx(ux))}" cy="{_f(fr.sy(uy))}" r="2" '
                f'fill="{STYLE["person_color"]}" fill-opacity="0.8"/>'
            )
            if opt.show_profile_labels and labels and i < len(labels):
                body.append(
                    _text(fr.sx(ux), fr.sy(uy) - 4, labels[i], size=8, color="#333333")
                )

    item_labels = map_.item_labels or [f"item{r + 1}" for r in range(V2.shape[0])]
    for r, (vx, vy) in enumerate(V2):
        body.append(
            f'<circle cx="{_f(fr.sx(vx))}" cy="{_f(fr.sy(vy))}" r="4" '
            f'fill="{STYLE["item_color"]}"/>'
        )
        body.append(
            _text(
                fr.sx(vx),
                fr.sy(vy) - 7,
                item_labels[r],
                size=STYLE["font_size"],
                color=STYLE["item_color"],
            )
        )
    return _document(opt.width, opt.height, body)


def _variable_axes(map_, predictors: PredictorSet, fr: _Frame) -> list[str]:
    """One line through the origin per predictor, with value markers on the
    original (uncentered) scale where the range permits."""
    parts = []
    B2 = _coords_2d(map_.B)
    X = predictors.X
    for p in range(B2.shape[0]):
        b = B2[p]
        norm = float(np.hypot(b[0], b[1]))
        if norm < 1e-12:
            continue
        color = PALETTE[p % len(PALETTE)]
        lo, hi = float(X[:, p].min()), float(X[:, p].max())
        reach = 4.0 * max(
            abs(fr.xlim[0]), abs(fr.xlim[1]), abs(fr.ylim[0]), abs(fr.ylim[1])
        ) / norm
        clipped = fr.clip_line((-reach * b[0], -reach * b[1]), (reach * b[0], reach * b[1]))
        if clipped is not None:
            (x1, y1), (x2, y2) = clipped
            parts.append(
                f'<line x1="{_f(fr.sx(x1))}" y1="{_f(fr.sy(y1))}" '
                f'x2="{_f(fr.sx(x2))}" y2="{_f(fr.sy(y2))}" stroke="{color}" '
                f'stroke-width="1" stroke-dasharray="4,3" stroke-opacity="0.8"/>'
            )
        parts.append(
            f'<line x1="{_f(fr.sx(lo * b[0]))}" y1="{_f(fr.sy(lo * b[1]))}" '
            f'x2="{_f(fr.sx(hi * b[0]))}" y2="{_f(fr.sy(hi * b[1]))}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        center = float(predictors.centering[p])
        for value in _nice_ticks(lo + center, hi + center, target=6):
            t = value - center
            mx, my = t * b[0], t * b[1]
            parts.append(
                f'<circle cx="{_f(fr.sx(mx))}" cy="{_f(fr.sy(my))}" r="2.5" '
                f'fill="{color}"/>'
            )
            parts.append(
                _text(fr.sx(mx) + 4, fr.sy(my) - 4, _tick_label(value), size=8, anchor="start", color=color)
            )
        label_t = hi + 0.06 * max(hi - lo, 1e-9)
        parts.append(
            _text(
                fr.sx(label_t * b[0]),
                fr.sy(label_t * b[1]),
                predictors.predictor_labels[p],
                size=STYLE["font_size"],
                color=color,
            )
        )
    return parts


def render_panels(kind: str, data, options: RenderOptions | None = None, seed: int = 0) -> str:
    """Diagnostic figures: 'local_optima' jittered deviance strips,
    'cpr' component-plus-residual grids, 'influence' three-panel scatter,
    'brier_box' paired boxplots."""
    if kind == "local_optima":
        return _render_strips(data, options, seed, y_label="deviance")
    if kind == "brier_box":
        return _render_boxes(data, options, y_label="Brier score")
    if kind == "influence":
        return _render_influence(data, options)
    if kind == "cpr":
        return _render_cpr(data, options)
    raise DataError(f"unknown panel kind: {kind!r}")


def _columns_frame(data, opt, y_label):
    if not data:
        raise DataError("no data to render")
    values_all = np.concatenate([np.asarray(v, dtype=float) for _, v in data])
    if values_all.size == 0:
        raise DataError("no data to render")
    lo, hi = float(values_all.min()), float(values_all.max())
    pad = 0.05 * max(hi - lo, 1e-9)
    fr = _Frame(
        60,
        30,
        opt.width - 90,
        opt.height - 80,
        (0.0, float(len(data))),
        (lo - pad, hi + pad),
    )
    parts = [fr.frame_rect()]
    for t in _nice_ticks(*fr.ylim):
        y = fr.sy(t)
        parts.append(
            f'<line x1="{_f(fr.x0 - 4)}" y1="{_f(y)}" x2="{_f(fr.x0)}" y2="{_f(y)}" '
            f'stroke="{STYLE["frame"]}" stroke-width="1"/>'
        )
        parts.append(_text(fr.x0 - 7, y + 3, _tick_label(t), size=9, anchor="end"))
    for k, (label, _) in enumerate(data):
        parts.append(_text(fr.sx(k + 0.5), fr.y0 + fr.h + 16, label, size=10))
    parts.append(
        f'<g transform="translate({_f(fr.x0 - 44)},{_f(fr.y0 + fr.h / 2)}) rotate(-90)">'
        + _text(0, 0, y_label, size=10)
        + "</g>"
    )
    return fr, parts


def _render_strips(data, options, seed, y_label):
    """data: list of (label, values); one jittered column per entry."""
    opt = options or RenderOptions(width=540, height=420)
    fr, parts = _columns_frame(data, opt, y_label)
    rng = np.random.default_rng(seed)
    for k, (_, values) in enumerate(data):
        values = np.asarray(values, dtype=float)
        jitter = rng.uniform(-0.15, 0.15, size=values.shape[0])
        for j, v in enumerate(values):
            parts.append(
                f'<circle cx="{_f(fr.sx(k + 0.5 + jitter[j]))}" cy="{_f(fr.sy(v))}" '
                f'r="2.5" fill="{PALETTE[k % len(PALETTE)]}" fill-opacity="0.6"/>'
            )
    return _document(opt.width, opt.height, parts)


def _render_boxes(data, options, y_label):
    """data: list of (label, values); one box-and-whisker per entry."""
    opt = options or RenderOptions(width=540, height=420)
    fr, parts = _columns_frame(data, opt, y_label)
    half = 0.18
    for k, (_, values) in enumerate(data):
        values = np.asarray(values, dtype=float)
        q1, med, q3 = (float(q) for q in np.percentile(values, [25, 50, 75]))
        lo, hi = float(values.min()), float(values.max())
        cx = k + 0.5
        color = PALETTE[k % len(PALETTE)]
        x1, x2 = fr.sx(cx - half), fr.sx(cx + half)
        parts.append(
            f'<line x1="{_f(fr.sx(cx))}" y1="{_f(fr.sy(lo))}" x2="{_f(fr.sx(cx))}" '
            f'y2="{_f(fr.sy(q1))}" stroke="{color}" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{_f(fr.sx(cx))}" y1="{_f(fr.sy(q3))}" x2="{_f(fr.sx(cx))}" '
            f'y2="{_f(fr.sy(hi))}" stroke="{color}" stroke-width="1"/>'
        )
        parts.append(
            f'<rect x="{_f(x1)}" y="{_f(fr.sy(q3))}" width="{_f(x2 - x1)}" '
            f'height="{_f(max(fr.sy(q1) - fr.sy(q3), 0.5))}" fill="{color}" '
            f'fill-opacity="0.25" stroke="{color}" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(fr.sy(med))}" x2="{_f(x2)}" '
            f'y2="{_f(fr.sy(med))}" stroke="{color}" stroke-width="2"/>'
        )
    return _document(opt.width, opt.height, parts)


def _scatter_panel(fr, xs, ys, color, radius=2.0, opacity=0.7):
    parts = []
    for x, y in zip(xs, ys):
        parts.append(
            f'<circle cx="{_f(fr.sx(x))}" cy="{_f(fr.sy(y))}" r="{_f(radius)}" '
            f'fill="{color}" fill-opacity="{opacity}"/>'
        )
    return parts


def _polyline(fr, xs, ys, color, width=1.5, dashed=False):
    pts = " ".join(f"{_f(fr.sx(x))},{_f(fr.sy(y))}" for x, y in zip(xs, ys))
    dash = ' stroke-dasharray="5,3"' if dashed else ""
    return (
        f'<polyline points="{pts}" fill="none" stroke="{color}" '
        f'stroke-width="{width}"{dash}/>'
    )


def _render_influence(records, options):
    """Three panels: change in deviance, regression weights, and item
    locations against the observation index."""
    records = list(records)
    if not records:
        raise DataError("no influence records to render")
    opt = options or RenderOptions(width=900, height=320)
    panel_w = (opt.width - 4 * 50) / 3.0
    parts = []
    series = [
        ("delta deviance", [r.delta_deviance for r in records]),
        ("delta B", [r.delta_B for r in records]),
        ("delta V", [r.delta_V for r in records]),
    ]
    idx = [r.index for r in records]
    for k, (label, values) in enumerate(series):
        values = np.asarray(values, dtype=float)
        finite = values[np.isfinite(values)]
        lo = float(finite.min()) if finite.size else 0.0
        hi = float(finite.max()) if finite.size else 1.0
        pad = 0.05 * max(hi - lo, 1e-9)
        fr = _Frame(
            50 + k * (panel_w + 50),
            30,
            panel_w,
            opt.height - 90,
            (min(idx) - 0.5, max(idx) + 0.5),
            (lo - pad, hi + pad),
        )
        parts.extend(_axes(fr, x_label="observation", y_label=label))
        good = np.isfinite(values)
        parts.extend(
            _scatter_panel(
                fr,
                np.asarray(idx, dtype=float)[good],
                values[good],
                PALETTE[k % len(PALETTE)],
            )
        )
    return _document(opt.width, opt.height, parts)


def _render_cpr(panels, options):
    """Grid of component-plus-residual panels: scatter, assumed-form curve,
    and smoother, predictors as columns and items as rows."""
    panels = list(panels)
    if not panels:
        raise DataError("no component-plus-residual panels to render")
    predictors = []
    items = []
    for pan in panels:
        if pan.predictor not in predictors:
            predictors.append(pan.predictor)
        if pan.item not in items:
            items.append(pan.item)
    ncol, nrow = len(predictors), len(items)
    cell_w, cell_h = 220, 170
    margin = 54
    width = margin + ncol * (cell_w + 36)
    height = 40 + nrow * (cell_h + 44)
    parts = []
    for pan in panels:
        col = predictors.index(pan.predictor)
        row = items.index(pan.item)
        ys = np.concatenate([pan.scatter, pan.assumed, pan.smooth])
        lo, hi = float(ys.min()), float(ys.max())
        pad = 0.05 * max(hi - lo, 1e-9)
        fr = _Frame(
            margin + col * (cell_w + 36),
            40 + row * (cell_h + 44),
            cell_w,
            cell_h,
            (float(pan.x.min()), float(pan.x.max())),
            (lo - pad, hi + pad),
        )
        parts.extend(_axes(fr, x_label=pan.predictor))
        parts.append(_text(fr.x0 + fr.w / 2, fr.y0 - 6, f"{pan.item}", size=10))
        parts.extend(_scatter_panel(fr, pan.x, pan.scatter, "#999999", radius=1.5, opacity=0.5))
        parts.append(_polyline(fr, pan.grid, pan.assumed, PALETTE[0], width=1.8))
        parts.append(_polyline(fr, pan.grid, pan.smooth, PALETTE[1], width=1.8, dashed=True))
    return _document(int(width), int(height), parts)
