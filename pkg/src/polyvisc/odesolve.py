"""Adaptive embedded Runge-Kutta integration with dense output.

Implements the Dormand-Prince 5(4) pair with the standard quartic
interpolant and PI step-size control. One integrator serves both the scalar
creep equation and the six-component tensor evolution; an optional
``step_hook`` lets callers monitor or adjust the state after every accepted
step (used to police determinant drift during natural-configuration
evolution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth-order minus embedded fourth-order weights (local error estimate)
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# dense-output coefficients for the extra interpolation polynomial term
_D = np.array(
    [
        -12715105075 / 11282082432,
        0.0,
        87487479700 / 32700410799,
        -10690763975 / 1880347072,
        701980252875 / 199316789632,
        -1453857185 / 822651844,
        69997945 / 29380423,
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_PI_BETA = 0.04  # PI controller damping exponent
_EXPO = 0.2 - 0.75 * _PI_BETA
_MIN_STEP_FRACTION = 1e-12  # of the span; below this the problem is stiff/singular
_MAX_STEPS = 1_000_000

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10


class IntegrationError(RuntimeError):
    """Integration failed; carries the last valid state and partial solution."""

    def __init__(self, message: str, t: float, y: np.ndarray, partial=None):
        super().__init__(message)
        self.t = t
        self.y = y
        self.partial = partial  # OdeSolution up to the failure, if available


@dataclass(frozen=True)
class OdeProblem:
    """An initial-value problem dy/dt = f(t, y) over a time span."""

    rhs: Callable[[float, np.ndarray], np.ndarray]
    span: tuple
    y0: np.ndarray
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    def __post_init__(self):
        t0, t1 = self.span
        if not (t1 > t0):
            raise ValueError(f"span must be increasing, got {self.span}")
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise ValueError("tolerances must be positive")


@dataclass
class _Segment:
    """Dense-output polynomial for one accepted step."""

    t0: float
    h: float
    coef: np.ndarray  # (5, dim): y0, dy, bspl, r4, r5

    def eval(self, t: float) -> np.ndarray:
        s = (t - self.t0) / self.h
        c = self.coef
        # Horner-like form of the standard quartic interpolant
        return c[0] + s * (c[1] + (1.0 - s) * (c[2] + s * (c[3] + (1.0 - s) * c[4])))

    def eval_derivative(self, t: float) -> np.ndarray:
        # chain rule through u(s) = c0 + s*(c1 + (1-s)*(c2 + s*(c3 + (1-s)*c4)))
        s = (t - self.t0) / self.h
        c = self.coef
        inner = c[3] + (1.0 - s) * c[4]
        mid = c[2] + s * inner
        d_inner = -c[4]
        d_mid = inner + s * d_inner
        du = c[1] + (1.0 - s) * mid + s * (-mid + (1.0 - s) * d_mid)
        return du / self.h


@dataclass
class OdeSolution:
    """Accepted mesh, states, and a dense evaluator over the span."""

    ts: np.ndarray
    ys: np.ndarray
    segments: list = field(repr=False, default_factory=list)
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0

    def _eval(self, t, derivative: bool) -> np.ndarray:
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(tq < self.ts[0] - 1e-12) or np.any(tq > self.ts[-1] + 1e-12):
            raise ValueError("dense output queried outside the integration span")
        out = np.empty((tq.size, self.ys.shape[1]))
        # segment i covers [ts[i], ts[i+1]]
        idx = np.clip(np.searchsorted(self.ts, tq, side="right") - 1, 0, len(self.segments) - 1)
        for k, (ti, i) in enumerate(zip(tq, idx)):
            seg = self.segments[int(i)]
            out[k] = seg.eval_derivative(ti) if derivative else seg.eval(ti)
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return out[0]
        return out

    def __call__(self, t) -> np.ndarray:
        return self._eval(t, derivative=False)

    def derivative(self, t) -> np.ndarray:
        """Time derivative of the interpolant (the dense state's own slope)."""
        return self._eval(t, derivative=True)


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, t1, rtol, atol) -> float:
    """Automatic initial step selection (Hairer-Norsett-Wanner heuristic)."""
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t1 - t0)


def integrate(
    problem: OdeProblem,
    step_hook: Optional[Callable[[float, np.ndarray], Optional[np.ndarray]]] = None,
) -> OdeSolution:
    """Integrate the problem over its span.

    ``step_hook(t, y)`` runs after every accepted step; it may raise to
    abort, or return a replacement state (e.g. a projection). Hook
    replacements invalidate FSAL reuse for the next step.
    """
    rhs = problem.rhs
    t0, t1 = float(problem.span[0]), float(problem.span[1])
    rtol, atol = problem.rtol, problem.atol
    y = np.array(problem.y0, dtype=float).ravel()
    dim = y.size

    t = t0
    f = np.asarray(rhs(t, y), dtype=float)
    n_rhs = 1
    h = _initial_step(rhs, t0, y, f, t1, rtol, atol)
    n_rhs += 1

    ts = [t0]
    ys = [y.copy()]
    segments: list = []
    n_accepted = 0
    n_rejected = 0
    err_prev = 1e-4  # PI controller memory

    k = np.empty((7, dim))
    min_step = _MIN_STEP_FRACTION * (t1 - t0)

    def _partial():
        return OdeSolution(
            ts=np.array(ts), ys=np.array(ys), segments=segments,
            n_accepted=n_accepted, n_rejected=n_rejected, n_rhs=n_rhs,
        )

    while t < t1:
        if n_accepted + n_rejected > _MAX_STEPS:
            raise IntegrationError("step budget exhausted", t, y, _partial())
        if h < min_step:
            raise IntegrationError(
                f"step size underflow at t = {t} (h = {h}); problem too stiff or singular",
                t,
                y,
                _partial(),
            )
        h = min(h, t1 - t)

        k[0] = f
        for i in range(1, 7):
            yi = y + h * (_A[i] @ k[:i])
            k[i] = rhs(t + _C[i] * h, yi)
        n_rhs += 6

        y_new = y + h * (_B5 @ k)
        # stage 7 is evaluated at (t+h, y_new): FSAL
        err_vec = h * (_E @ k)
        err = _error_norm(err_vec, y, y_new, rtol, atol)

        if not math.isfinite(err):
            # overshot into a bad region; retry with a much smaller step
            n_rejected += 1
            h *= _MIN_FACTOR
            continue

        if err <= 1.0:
            # dense-output coefficients for this step
            dy = y_new - y
            bspl = h * k[0] - dy
            r4 = dy - h * k[6] - bspl
            r5 = h * (_D @ k)
            seg = _Segment(t, h, np.array([y, dy, bspl, r4, r5]))

            t_new = t + h
            f_new = k[6].copy()
            if step_hook is not None:
                try:
                    adjusted = step_hook(t_new, y_new)
                except IntegrationError as exc:
                    if exc.partial is None:
                        exc.partial = _partial()
                    raise
                if adjusted is not None:
                    # note: the dense segment keeps the pre-adjustment path
                    y_new = np.asarray(adjusted, dtype=float)
                    f_new = np.asarray(rhs(t_new, y_new), dtype=float)
                    n_rhs += 1
            segments.append(seg)
            t, y, f = t_new, y_new, f_new
            ts.append(t)
            ys.append(y.copy())
            n_accepted += 1

            factor = _SAFETY * err ** (-_EXPO) * err_prev ** _PI_BETA if err > 0.0 else _MAX_FACTOR
            h *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = max(err, 1e-4)
        else:
            n_rejected += 1
            factor = _SAFETY * err ** (-0.2)
            h *= min(1.0, max(_MIN_FACTOR, factor))

    return OdeSolution(
        ts=np.array(ts),
        ys=np.array(ys),
        segments=segments,
        n_accepted=n_accepted,
        n_rejected=n_rejected,
        n_rhs=n_rhs,
    )
