"""Uniaxial creep and recovery under piecewise-constant axial stress.

Within a constant-stress segment the traction-free condition pins the
natural-configuration stretch B, so only the total stretch lambda evolves
(a single scalar ODE). Instantaneous load changes enter as multiplicative
jumps of lambda between segments; the initial condition of a virgin load is
lambda(0) = sqrt(B). Strain is logarithmic by default (engineering strain
is available for data reported that way).

``sls_creep_analytic`` is the small-strain limit: a standard-linear-solid
creep curve with instantaneous compliance 1/(3*mu_p_bar), retardation
strength 1/(3*mu_g_bar) and time constant eta/(2*mu_g_bar). The factor 3
is the incompressible uniaxial modulus factor; the strictly one-dimensional
reduction of the same model carries a factor 2 instead. All oracles here
use the three-dimensional value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .material import MaterialParams
from .odesolve import DEFAULT_ATOL, DEFAULT_RTOL, OdeProblem, OdeSolution, integrate
from .tensors import DomainError

STRAIN_MEASURES = ("log", "engineering")


@dataclass(frozen=True)
class CreepSegment:
    """One piece of a stress program: constant axial stress held for a duration."""

    stress: float  # Pa
    duration: float  # s

    def __post_init__(self):
        if not (self.duration > 0.0):
            raise ValueError(f"segment duration must be positive, got {self.duration}")
        if not math.isfinite(self.stress):
            raise ValueError("segment stress must be finite")


def solve_B(t11: float, mu_p_bar: float) -> float:
    """Natural-configuration stretch B under axial stress t11, lateral faces free.

    B solves mu_p_bar*(B - B^-1/2) = t11; in s = sqrt(B) this is the cubic
    s^3 - (t11/mu_p_bar)*s - 1 = 0, which has exactly one positive root.
    Newton from s = 1 + a/3 with a bisection safeguard.
    """
    if not (mu_p_bar > 0.0):
        raise DomainError(f"mu_p_bar must be positive, got {mu_p_bar}")
    a = t11 / mu_p_bar

    def g(s):
        return s * s * s - a * s - 1.0

    lo, hi = 1e-3, 2.0 + abs(a)  # g(lo) < 0 < g(hi) for all finite a
    s = 1.0 + a / 3.0
    if not (lo < s < hi):
        s = 0.5 * (lo + hi)
    for _ in range(100):
        gs = g(s)
        if gs == 0.0:
            break
        if gs > 0.0:
            hi = s
        else:
            lo = s
        dg = 3.0 * s * s - a
        s_new = s - gs / dg if dg != 0.0 else 0.5 * (lo + hi)
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 1e-14:
            s = s_new
            break
        s = s_new
    return s * s


def lambda_rate(lam: float, b: float, b_dot: float, mp: MaterialParams) -> float:
    """Stretch rate of uniaxial extension at natural-configuration stretch b."""
    if not (lam > 0.0 and b > 0.0):
        raise DomainError(f"lambda and B must be positive, got {lam}, {b}")
    mu_p, mu_g, eta = mp.mu_p_bar, mp.mu_g_bar, mp.eta
    frac = (mu_g * (lam**3 + 2.0 * b**3) - 3.0 * mu_p * b * b * lam) / (
        b * lam * (1.0 + 2.0 * b**1.5)
    )
    return lam * (
        b_dot / (2.0 * b) - (mu_g * lam * lam / b - mu_p * b - frac) / (eta * b)
    )


@dataclass
class SegmentTrace:
    """Solved lambda history of one constant-stress segment (absolute time)."""

    index: int
    stress: float  # Pa
    b: float  # natural-configuration stretch, constant in the segment
    t_start: float
    t_end: float
    lam_start: float  # post-jump stretch at t_start
    sol: OdeSolution = field(repr=False)

    def lam_at(self, t) -> np.ndarray:
        out = self.sol(np.atleast_1d(np.asarray(t, dtype=float)))[:, 0]
        return out if np.ndim(t) else float(out[0])

    def lam_rate_at(self, t) -> np.ndarray:
        """Slope of the solved stretch history (dense-output derivative)."""
        out = self.sol.derivative(np.atleast_1d(np.asarray(t, dtype=float)))[:, 0]
        return out if np.ndim(t) else float(out[0])


@dataclass
class CreepCurve:
    """Strain samples of a piecewise-constant stress program.

    ``t``/``epsilon`` are flattened over segments; the post-jump sample at
    each interior boundary is omitted there so times stay strictly
    increasing (it is retained in the per-segment traces, whose dense
    evaluators carry the full one-sided information).
    """

    t: np.ndarray
    epsilon: np.ndarray
    segments: List[SegmentTrace]
    strain_measure: str = "log"

    def _to_strain(self, lam: np.ndarray) -> np.ndarray:
        if self.strain_measure == "engineering":
            return lam - 1.0
        return np.log(lam)

    def strain_in_segment(self, index: int, times) -> np.ndarray:
        """Strain at arbitrary times inside one segment (dense output)."""
        lam = self.segments[index].lam_at(np.atleast_1d(times))
        return self._to_strain(lam)

    @property
    def boundaries(self) -> list:
        """(segment index, start time, stress) markers."""
        return [(s.index, s.t_start, s.stress) for s in self.segments]


def simulate_creep(
    segments,
    mp: MaterialParams,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    strain_measure: str = "log",
) -> CreepCurve:
    """Integrate the stress program and return the resulting strain curve.

    Per segment, B is pinned by the traction-free relation; lambda starts
    from sqrt(B) at t = 0 and jumps by sqrt(B_new/B_old) across segment
    boundaries (instantaneous elastic accommodation), then follows the flow
    rule with B held constant.
    """
    segments = [
        s if isinstance(s, CreepSegment) else CreepSegment(*s) for s in segments
    ]
    if not segments:
        raise ValueError("at least one segment is required")
    if strain_measure not in STRAIN_MEASURES:
        raise ValueError(f"unknown strain measure {strain_measure!r}")

    traces: List[SegmentTrace] = []
    t0 = 0.0
    lam = None
    b_prev = None
    for k, seg in enumerate(segments):
        b = solve_B(seg.stress, mp.mu_p_bar)
        if k == 0:
            lam = math.sqrt(b)
        else:
            lam *= math.sqrt(b / b_prev)

        def rhs(t, y, _b=b):
            return np.array([lambda_rate(float(y[0]), _b, 0.0, mp)])

        sol = integrate(
            OdeProblem(rhs=rhs, span=(t0, t0 + seg.duration), y0=np.array([lam]),
                       rtol=rtol, atol=atol)
        )
        traces.append(
            SegmentTrace(
                index=k,
                stress=seg.stress,
                b=b,
                t_start=t0,
                t_end=t0 + seg.duration,
                lam_start=lam,
                sol=sol,
            )
        )
        lam = float(sol.ys[-1, 0])
        t0 += seg.duration
        b_prev = b

    ts = []
    lams = []
    for k, tr in enumerate(traces):
        t_seg = tr.sol.ts
        lam_seg = tr.sol.ys[:, 0]
        if k > 0:  # drop the duplicated boundary time (post-jump value)
            t_seg = t_seg[1:]
            lam_seg = lam_seg[1:]
        ts.append(t_seg)
        lams.append(lam_seg)
    t_all = np.concatenate(ts)
    lam_all = np.concatenate(lams)
    eps = lam_all - 1.0 if strain_measure == "engineering" else np.log(lam_all)
    return CreepCurve(t=t_all, epsilon=eps, segments=traces, strain_measure=strain_measure)


# Loads above this fraction of mu_p_bar are outside the small-strain regime
# the analytic curve was derived for.
SLS_SMALL_STRAIN_FRACTION = 0.05


def sls_creep_analytic(t11: float, mp: MaterialParams, t) -> np.ndarray:
    """Small-strain creep strain at time(s) t under constant stress t11.

    epsilon(t) = t11/(3 mu_p) + t11/(3 mu_g) * (1 - exp(-2 mu_g t / eta));
    in the fluid limit (mu_g = 0) the retardation term degenerates to
    steady flow, epsilon(t) = t11/(3 mu_p) + 2 t11 t / (3 eta).
    """
    if abs(t11) > SLS_SMALL_STRAIN_FRACTION * mp.mu_p_bar:
        warnings.warn(
            f"stress {t11:g} Pa exceeds {SLS_SMALL_STRAIN_FRACTION:g}*mu_p_bar; "
            "the linearized creep curve is unreliable at this load",
            stacklevel=2,
        )
    t = np.asarray(t, dtype=float)
    instant = t11 / (3.0 * mp.mu_p_bar)
    if mp.mu_g_bar == 0.0:
        return instant + 2.0 * t11 * t / (3.0 * mp.eta)
    tau = mp.eta / (2.0 * mp.mu_g_bar)
    return instant + t11 / (3.0 * mp.mu_g_bar) * (1.0 - np.exp(-t / tau))
