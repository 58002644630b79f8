"""Dataset ingestion, built-in parameter presets, and result emission.

Dataset CSV format (UTF-8, SI units):

    # stress_pa=1.0e7
    # temperature_c=288
    segment,t_s,strain
    load,0.0,0.0088260
    ...
    unload,70000.0,0.0021255

Optional metadata lines: ``# t_unload_s=<v>`` (when the stress removal time
is not the last load stamp) and ``# provenance=<text>``. Other comment
lines are ignored.

The presets bundle the published best-fit parameter sets for HFPE-II-52 at
four temperatures and PMR-15 at 288 C; experimental raw curves are not
redistributable, so a synthetic-dataset generator (simulator plus seeded
multiplicative noise) stands in for them in tests and examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
from xml.etree import ElementTree as ET

import numpy as np

from .fitting import ExperimentalDataset
from .material import MaterialParams
from .uniaxial import CreepCurve, CreepSegment, simulate_creep


class DatasetError(ValueError):
    """Malformed dataset file; message carries the offending line number."""


@dataclass(frozen=True)
class PresetRow:
    """One published parameter set."""

    name: str
    temperature_c: float
    mu_p_bar: float  # Pa
    mu_g_bar: float  # Pa
    eta: float  # Pa*s
    uts_mpa: Optional[float] = None
    load_fraction: Optional[float] = None  # fraction of UTS used for the fit
    fit_stress_pa: Optional[float] = None  # absolute load when UTS is unknown

    def params(self) -> MaterialParams:
        return MaterialParams(self.mu_p_bar, self.mu_g_bar, self.eta)

    def fit_load_pa(self) -> float:
        """Stress level of the dataset the parameters were fitted to."""
        if self.fit_stress_pa is not None:
            return self.fit_stress_pa
        return self.load_fraction * self.uts_mpa * 1e6


_PRESETS = {
    "hfpe285": PresetRow("hfpe285", 285.0, 4.79e8, 1.43e9, 3.95e13,
                         uts_mpa=43.0, load_fraction=0.45),
    "hfpe300": PresetRow("hfpe300", 300.0, 4.12e8, 0.51e9, 2.23e13,
                         uts_mpa=40.2, load_fraction=0.45),
    "hfpe315": PresetRow("hfpe315", 315.0, 4.19e8, 0.79e9, 4.04e13,
                         uts_mpa=36.3, load_fraction=0.30),
    "hfpe330": PresetRow("hfpe330", 330.0, 5.07e8, 0.79e9, 3.19e13,
                         uts_mpa=23.8, load_fraction=0.20),
    "pmr15_288": PresetRow("pmr15_288", 288.0, 3.76e8, 4.42e8, 6.22e12,
                           fit_stress_pa=1.0e7),
}


def presets() -> dict:
    """All built-in parameter presets, keyed by name."""
    return dict(_PRESETS)


def get_preset(name: str) -> PresetRow:
    try:
        return _PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(_PRESETS))}"
        ) from None


# --------------------------------------------------------------------------
# dataset CSV


def load_dataset(path) -> ExperimentalDataset:
    """Parse a dataset CSV; raises DatasetError with a line number on bad input."""
    stress = None
    temperature_c = None
    unload_start = None
    provenance = ""
    header_seen = False
    t_load: List[float] = []
    eps_load: List[float] = []
    t_unload: List[float] = []
    eps_unload: List[float] = []

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key = key.strip()
                    value = value.strip()
                    if key == "stress_pa":
                        stress = _parse_number(value, lineno, "stress_pa")
                    elif key == "temperature_c":
                        temperature_c = _parse_number(value, lineno, "temperature_c")
                    elif key == "t_unload_s":
                        unload_start = _parse_number(value, lineno, "t_unload_s")
                    elif key == "provenance":
                        provenance = value
                continue
            fields = [f.strip() for f in line.split(",")]
            if not header_seen:
                if fields != ["segment", "t_s", "strain"]:
                    raise DatasetError(
                        f"line {lineno}: expected header 'segment,t_s,strain', got {line!r}"
                    )
                header_seen = True
                continue
            if len(fields) != 3:
                raise DatasetError(f"line {lineno}: expected 3 fields, got {len(fields)}")
            seg, t_str, e_str = fields
            t = _parse_number(t_str, lineno, "t_s")
            e = _parse_number(e_str, lineno, "strain")
            if seg == "load":
                if t_unload:
                    raise DatasetError(
                        f"line {lineno}: load sample after the unload phase began"
                    )
                if t_load and t <= t_load[-1]:
                    raise DatasetError(f"line {lineno}: load times must be strictly increasing")
                t_load.append(t)
                eps_load.append(e)
            elif seg == "unload":
                if t_load and t < t_load[-1]:
                    raise DatasetError(
                        f"line {lineno}: unload time precedes the end of the load phase"
                    )
                if t_unload and t <= t_unload[-1]:
                    raise DatasetError(f"line {lineno}: unload times must be strictly increasing")
                t_unload.append(t)
                eps_unload.append(e)
            else:
                raise DatasetError(f"line {lineno}: unknown segment label {seg!r}")

    if not header_seen:
        raise DatasetError("line 1: missing header 'segment,t_s,strain'")
    if stress is None:
        raise DatasetError("line 1: missing '# stress_pa=<value>' metadata")
    try:
        return ExperimentalDataset(
            t_load=np.array(t_load),
            eps_load=np.array(eps_load),
            t_unload=np.array(t_unload),
            eps_unload=np.array(eps_unload),
            stress=stress,
            temperature_c=temperature_c,
            provenance=provenance or str(path),
            unload_start=unload_start,
        )
    except ValueError as exc:
        raise DatasetError(str(exc)) from exc


def _parse_number(s: str, lineno: int, what: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise DatasetError(f"line {lineno}: {what} is not a number: {s!r}") from None
    if not math.isfinite(v):
        raise DatasetError(f"line {lineno}: {what} must be finite")
    return v


def save_dataset(ds: ExperimentalDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# stress_pa={float(ds.stress)!r}\n")
        if ds.temperature_c is not None:
            fh.write(f"# temperature_c={float(ds.temperature_c)!r}\n")
        if ds.unload_start is not None:
            fh.write(f"# t_unload_s={float(ds.unload_start)!r}\n")
        if ds.provenance:
            fh.write(f"# provenance={ds.provenance}\n")
        fh.write("segment,t_s,strain\n")
        # full precision: fits treat these as exact observations
        for t, e in zip(ds.t_load, ds.eps_load):
            fh.write(f"load,{float(t)!r},{float(e)!r}\n")
        for t, e in zip(ds.t_unload, ds.eps_unload):
            fh.write(f"unload,{float(t)!r},{float(e)!r}\n")


# --------------------------------------------------------------------------
# curve / trajectory CSV


def save_curve(curve: CreepCurve, path) -> None:
    """Write a strain curve with one comment marker per stress segment."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_s,strain\n")
        for seg in curve.segments:
            fh.write(f"# segment {seg.index} stress_pa={seg.stress!r}\n")
            lam = seg.sol.ys[:, 0]
            eps = lam - 1.0 if curve.strain_measure == "engineering" else np.log(lam)
            for t, e in zip(seg.sol.ts, eps):
                fh.write(f"{t:.9f},{e:.9f}\n")


def save_trajectory(traj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# pressure_convention={traj.pressure_convention}\n")
        fh.write("t,eps_axial,T11_pa,detBp,xi_m,identity_residual\n")
        for i in range(len(traj)):
            fh.write(
                f"{traj.t[i]:.9f},{traj.eps_axial[i]:.12e},{traj.t_axial[i]:.6e},"
                f"{traj.det_bp[i]:.15f},{traj.xi_m[i]:.6e},{traj.identity_residual[i]:.3e}\n"
            )


# --------------------------------------------------------------------------
# synthetic data


def make_synthetic_dataset(
    mp: MaterialParams,
    stress: float,
    t_load: float,
    t_unload: float = 0.0,
    n_load: int = 50,
    n_unload: int = 20,
    noise: float = 0.0,
    seed: int = 0,
    temperature_c: Optional[float] = None,
    rtol: float = 1e-8,
) -> ExperimentalDataset:
    """Sample a simulated creep/recovery curve, optionally with noise.

    Noise is multiplicative Gaussian (relative standard deviation ``noise``)
    with a fixed seed so generated datasets are reproducible. The default
    ``rtol`` matches the fitting objective's, so a zero-noise dataset is an
    exact fixed point of the fit.
    """
    segments = [CreepSegment(stress, t_load)]
    if t_unload > 0.0:
        segments.append(CreepSegment(0.0, t_unload))
    curve = simulate_creep(segments, mp, rtol=rtol)

    ts_load = np.linspace(0.0, t_load, n_load)
    eps_load = curve.strain_in_segment(0, ts_load)
    if t_unload > 0.0:
        ts_unload = np.linspace(t_load, t_load + t_unload, n_unload + 1)[1:]
        eps_unload = curve.strain_in_segment(1, ts_unload)
    else:
        ts_unload = np.array([])
        eps_unload = np.array([])

    if noise > 0.0:
        rng = np.random.default_rng(seed)
        eps_load = eps_load * (1.0 + noise * rng.standard_normal(eps_load.size))
        if eps_unload.size:
            eps_unload = eps_unload * (1.0 + noise * rng.standard_normal(eps_unload.size))

    return ExperimentalDataset(
        t_load=ts_load,
        eps_load=eps_load,
        t_unload=ts_unload,
        eps_unload=eps_unload,
        stress=stress,
        temperature_c=temperature_c,
        provenance=f"synthetic(seed={seed}, noise={noise})",
    )


# --------------------------------------------------------------------------
# SVG rendering

_SVG_W = 800
_SVG_H = 600
_MARGIN_FRACTION = 0.05
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

Series = Union[CreepCurve, Tuple[str, Sequence[float], Sequence[float]]]


def _as_series(item: Series, index: int) -> Tuple[str, np.ndarray, np.ndarray]:
    if isinstance(item, CreepCurve):
        return f"curve {index}", np.asarray(item.t), np.asarray(item.epsilon)
    label, t, e = item
    return str(label), np.asarray(t, dtype=float), np.asarray(e, dtype=float)


def render_svg(curves: Sequence[Series]) -> str:
    """Render strain-vs-time series as a standalone 800x600 SVG document.

    Accepts CreepCurve objects or (label, times, strains) triples; axes are
    linear and auto-scaled with a 5 percent margin, one polyline per series,
    legend from the labels.
    """
    if not curves:
        raise ValueError("render_svg needs at least one curve")
    series = [_as_series(c, i) for i, c in enumerate(curves)]

    all_t = np.concatenate([s[1] for s in series])
    all_e = np.concatenate([s[2] for s in series])
    t_lo, t_hi = float(np.min(all_t)), float(np.max(all_t))
    e_lo, e_hi = float(np.min(all_e)), float(np.max(all_e))
    t_pad = (t_hi - t_lo) * _MARGIN_FRACTION or 1.0
    e_pad = (e_hi - e_lo) * _MARGIN_FRACTION or max(abs(e_hi), 1e-6) * _MARGIN_FRACTION
    t_lo, t_hi = t_lo - t_pad, t_hi + t_pad
    e_lo, e_hi = e_lo - e_pad, e_hi + e_pad

    # plot area inside fixed pixel margins for the axis labels
    px0, px1 = 70.0, _SVG_W - 20.0
    py0, py1 = _SVG_H - 50.0, 20.0  # y axis points up

    def to_px(t, e):
        x = px0 + (t - t_lo) / (t_hi - t_lo) * (px1 - px0)
        y = py0 + (e - e_lo) / (e_hi - e_lo) * (py1 - py0)
        return x, y

    root = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(_SVG_W),
        height=str(_SVG_H),
        viewBox=f"0 0 {_SVG_W} {_SVG_H}",
    )
    ET.SubElement(root, "rect", x="0", y="0", width=str(_SVG_W), height=str(_SVG_H),
                  fill="white")
    # axes
    axis_style = {"stroke": "black", "stroke-width": "1"}
    ET.SubElement(root, "line", x1=str(px0), y1=str(py0), x2=str(px1), y2=str(py0),
                  **axis_style)
    ET.SubElement(root, "line", x1=str(px0), y1=str(py0), x2=str(px0), y2=str(py1),
                  **axis_style)
    xlabel = ET.SubElement(root, "text", x=str(0.5 * (px0 + px1)), y=str(_SVG_H - 12),
                           fill="black")
    xlabel.set("text-anchor", "middle")
    xlabel.text = "time (s)"
    ylabel = ET.SubElement(root, "text", x="18", y=str(0.5 * (py0 + py1)), fill="black")
    ylabel.set("text-anchor", "middle")
    ylabel.set("transform", f"rotate(-90 18 {0.5 * (py0 + py1)})")
    ylabel.text = "strain"
    # range annotations at the axis ends
    for t_val, anchor in ((t_lo, "start"), (t_hi, "end")):
        tick = ET.SubElement(root, "text", y=str(py0 + 16), fill="black")
        tick.set("x", str(to_px(t_val, e_lo)[0]))
        tick.set("text-anchor", anchor)
        tick.set("font-size", "11")
        tick.text = f"{t_val:.4g}"
    for e_val in (e_lo, e_hi):
        tick = ET.SubElement(root, "text", x=str(px0 - 6), fill="black")
        tick.set("y", str(to_px(t_lo, e_val)[1] + 4))
        tick.set("text-anchor", "end")
        tick.set("font-size", "11")
        tick.text = f"{e_val:.4g}"

    for i, (label, t, e) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in (to_px(ti, ei) for ti, ei in zip(t, e)))
        poly = ET.SubElement(root, "polyline", fill="none", stroke=color)
        poly.set("stroke-width", "1.5")
        poly.set("points", pts)
        # legend entry
        ly = 30 + 18 * i
        ET.SubElement(root, "line", x1=str(px1 - 150), y1=str(ly), x2=str(px1 - 120),
                      y2=str(ly), stroke=color)
        entry = ET.SubElement(root, "text", x=str(px1 - 112), y=str(ly + 4), fill="black")
        entry.set("font-size", "12")
        entry.text = label

    return ET.tostring(root, encoding="unicode")


def save_svg(curves: Sequence[Series], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('<?xml version="1.0" encoding="UTF-8"?>\n')
        fh.write(render_svg(curves))
        fh.write("\n")
