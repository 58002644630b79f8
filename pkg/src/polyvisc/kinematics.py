"""Deformation protocols and configuration maps.

A motion protocol prescribes the deformation gradient F(t) and velocity
gradient L(t) of a strain-controlled experiment. Uniaxial extension and
simple shear are built in; arbitrary sampled stretch histories are
interpolated monotonically so replayed trajectories stay physical.

``natural_maps`` splits the total left stretch into the part carried by the
natural configuration and the elastic part on top of it, using the symmetric
factor convention (the elastic map is taken as its own stretch tensor, so
the intermediate rotation is absorbed; see the module tests for the closed
uniaxial forms this must reproduce).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .tensors import DomainError, SymTensor3, Tensor3, inv_spd, is_spd, sqrt_spd


def uniaxial_F(lam: float) -> Tensor3:
    """Deformation gradient diag(lam, lam^-1/2, lam^-1/2) of isochoric uniaxial extension."""
    if not (lam > 0.0):
        raise DomainError(f"uniaxial stretch must be positive, got {lam}")
    lat = 1.0 / math.sqrt(lam)
    return Tensor3.diag(lam, lat, lat)


def uniaxial_L(lam: float, lam_dot: float) -> Tensor3:
    """Velocity gradient of uniaxial extension; traceless by construction."""
    if not (lam > 0.0):
        raise DomainError(f"uniaxial stretch must be positive, got {lam}")
    r = lam_dot / lam
    return Tensor3.diag(r, -0.5 * r, -0.5 * r)


def shear_F(gamma: float) -> Tensor3:
    """Simple-shear deformation gradient (unit determinant)."""
    return Tensor3((1.0, float(gamma), 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0))


def shear_L(gamma_dot: float) -> Tensor3:
    return Tensor3((0.0, float(gamma_dot), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0))


def natural_maps(b: SymTensor3, b_p: SymTensor3) -> tuple:
    """Split the total stretch: V = B_p^1/2 and B_G = V^-1 * B * V^-1.

    Returns ``(V, B_G)``. When both B and B_p are unimodular so is B_G
    (multiplicativity of determinants).
    """
    if not is_spd(b):
        raise DomainError("natural_maps requires an SPD total stretch B")
    v = sqrt_spd(b_p)
    v_inv = inv_spd(v)
    vm = v_inv.as_matrix()
    bg = SymTensor3.from_matrix(vm @ b.as_matrix() @ vm, check=False)
    return v, bg


@dataclass(frozen=True)
class MotionProtocol:
    """Strain-controlled motion over a time span.

    ``kind`` is one of "uniaxial", "shear", or "sampled"; the driving
    callables return the scalar stretch/shear and its rate at a time
    inside ``span``.
    """

    kind: str
    span: tuple
    drive: Callable[[float], float]
    drive_rate: Callable[[float], float]
    # optional constant rotation applied to the motion (F -> Q F)
    rotation: Optional[np.ndarray] = field(default=None, repr=False)

    def F(self, t: float) -> Tensor3:
        if self.kind == "shear":
            f = shear_F(self.drive(t))
        else:
            f = uniaxial_F(self.drive(t))
        if self.rotation is not None:
            f = Tensor3.from_matrix(self.rotation @ f.as_matrix())
        return f

    def L(self, t: float) -> Tensor3:
        if self.kind == "shear":
            l = shear_L(self.drive_rate(t))
        else:
            l = uniaxial_L(self.drive(t), self.drive_rate(t))
        if self.rotation is not None:
            # constant Q contributes no spin: L -> Q L Q^T exactly
            q = self.rotation
            l = Tensor3.from_matrix(q @ l.as_matrix() @ q.T)
        return l

    def axial_stretch(self, t: float) -> float:
        return self.drive(t)


def uniaxial_protocol(
    lam: Callable[[float], float],
    lam_dot: Callable[[float], float],
    span: tuple,
) -> MotionProtocol:
    return MotionProtocol("uniaxial", (float(span[0]), float(span[1])), lam, lam_dot)


def constant_stretch(lam0: float, span: tuple) -> MotionProtocol:
    if not (lam0 > 0.0):
        raise DomainError(f"uniaxial stretch must be positive, got {lam0}")
    return uniaxial_protocol(lambda t: lam0, lambda t: 0.0, span)


def shear_protocol(
    gamma: Callable[[float], float],
    gamma_dot: Callable[[float], float],
    span: tuple,
) -> MotionProtocol:
    return MotionProtocol("shear", (float(span[0]), float(span[1])), gamma, gamma_dot)


def sampled_uniaxial(times, stretches) -> MotionProtocol:
    """Uniaxial protocol through sampled (t, lambda) pairs.

    Uses monotone cubic interpolation so the interpolant never overshoots
    the data; the rate comes from the interpolant's derivative.
    """
    t = np.asarray(times, dtype=float)
    lam = np.asarray(stretches, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0.0):
        raise DomainError("sampled protocol times must be strictly increasing")
    if np.any(lam <= 0.0):
        raise DomainError("sampled stretches must be positive")
    interp = PchipInterpolator(t, lam)
    dinterp = interp.derivative()
    return MotionProtocol(
        "sampled",
        (float(t[0]), float(t[-1])),
        lambda s: float(interp(s)),
        lambda s: float(dinterp(s)),
    )
