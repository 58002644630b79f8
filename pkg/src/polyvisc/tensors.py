"""Exact-shape 3x3 tensor algebra.

Symmetric tensors are stored as their six independent components in the
canonical order (xx, yy, zz, xy, yz, xz); general tensors as nine row-major
components. Everything here is a plain immutable value type, so results are
bit-reproducible and safe to share across threads.

The spectral routines (Jacobi eigensolver, SPD square root, Sylvester-type
solve) are the workhorses of the natural-configuration evolution equation:
the flow rule requires solving A*X + X*A = M with A symmetric positive
definite at every right-hand-side evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """An input tensor violates a domain requirement (e.g. not SPD)."""


# Smallest admissible eigenvalue relative to the largest one; guards the
# square root and the Sylvester solve against near-singular input.
SPD_EIG_FLOOR = 1e-12

# Jacobi sweep controls: symmetric 3x3 always converges in a handful of
# cyclic sweeps, so hitting the cap signals a defect, not hard input.
_JACOBI_OFFDIAG_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 50


@dataclass(frozen=True)
class SymTensor3:
    """Symmetric second-order tensor with components (xx, yy, zz, xy, yz, xz)."""

    xx: float
    yy: float
    zz: float
    xy: float
    yz: float
    xz: float

    @staticmethod
    def identity() -> "SymTensor3":
        return SymTensor3(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def zero() -> "SymTensor3":
        return SymTensor3(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    @staticmethod
    def diag(a: float, b: float, c: float) -> "SymTensor3":
        return SymTensor3(float(a), float(b), float(c), 0.0, 0.0, 0.0)

    @staticmethod
    def from_matrix(m: np.ndarray, *, rtol: float = 1e-8, check: bool = True) -> "SymTensor3":
        """Build from a 3x3 matrix, averaging away floating-point asymmetry.

        Raises DomainError if the asymmetric part exceeds ``rtol`` relative
        to the matrix norm (the input was not actually symmetric). Internal
        call sites whose results are symmetric by algebra pass
        ``check=False``; the averaging still removes rounding skew.
        """
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise DomainError(f"expected a 3x3 matrix, got shape {m.shape}")
        if check:
            skew = m - m.T
            scale = np.linalg.norm(m)
            if scale > 0.0 and np.linalg.norm(skew) > rtol * scale:
                raise DomainError("matrix is not symmetric within tolerance")
        s = 0.5 * (m + m.T)
        return SymTensor3(s[0, 0], s[1, 1], s[2, 2], s[0, 1], s[1, 2], s[0, 2])

    @staticmethod
    def from_components(c) -> "SymTensor3":
        """Build from a length-6 sequence in canonical order."""
        xx, yy, zz, xy, yz, xz = (float(v) for v in c)
        return SymTensor3(xx, yy, zz, xy, yz, xz)

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.xx, self.xy, self.xz],
                [self.xy, self.yy, self.yz],
                [self.xz, self.yz, self.zz],
            ]
        )

    def as_components(self) -> np.ndarray:
        """Canonical (xx, yy, zz, xy, yz, xz) vector."""
        return np.array([self.xx, self.yy, self.zz, self.xy, self.yz, self.xz])

    def trace(self) -> float:
        return self.xx + self.yy + self.zz

    def det(self) -> float:
        return (
            self.xx * (self.yy * self.zz - self.yz * self.yz)
            - self.xy * (self.xy * self.zz - self.yz * self.xz)
            + self.xz * (self.xy * self.yz - self.yy * self.xz)
        )

    def ddot(self, other: "SymTensor3") -> float:
        """Double contraction A : B (off-diagonal terms counted twice)."""
        return (
            self.xx * other.xx
            + self.yy * other.yy
            + self.zz * other.zz
            + 2.0 * (self.xy * other.xy + self.yz * other.yz + self.xz * other.xz)
        )

    def norm(self) -> float:
        """Frobenius norm."""
        return math.sqrt(self.ddot(self))

    def __add__(self, other: "SymTensor3") -> "SymTensor3":
        return SymTensor3(
            self.xx + other.xx,
            self.yy + other.yy,
            self.zz + other.zz,
            self.xy + other.xy,
            self.yz + other.yz,
            self.xz + other.xz,
        )

    def __sub__(self, other: "SymTensor3") -> "SymTensor3":
        return SymTensor3(
            self.xx - other.xx,
            self.yy - other.yy,
            self.zz - other.zz,
            self.xy - other.xy,
            self.yz - other.yz,
            self.xz - other.xz,
        )

    def __mul__(self, k: float) -> "SymTensor3":
        k = float(k)
        return SymTensor3(
            k * self.xx, k * self.yy, k * self.zz, k * self.xy, k * self.yz, k * self.xz
        )

    __rmul__ = __mul__

    def __neg__(self) -> "SymTensor3":
        return self * -1.0

    def isfinite(self) -> bool:
        return all(
            math.isfinite(v)
            for v in (self.xx, self.yy, self.zz, self.xy, self.yz, self.xz)
        )


@dataclass(frozen=True)
class Tensor3:
    """General second-order tensor, nine row-major components."""

    components: tuple

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Tensor3":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise DomainError(f"expected a 3x3 matrix, got shape {m.shape}")
        return Tensor3(tuple(float(v) for v in m.ravel()))

    @staticmethod
    def diag(a: float, b: float, c: float) -> "Tensor3":
        return Tensor3((float(a), 0.0, 0.0, 0.0, float(b), 0.0, 0.0, 0.0, float(c)))

    @staticmethod
    def identity() -> "Tensor3":
        return Tensor3.diag(1.0, 1.0, 1.0)

    @staticmethod
    def zero() -> "Tensor3":
        return Tensor3((0.0,) * 9)

    def as_matrix(self) -> np.ndarray:
        return np.array(self.components).reshape(3, 3)

    def trace(self) -> float:
        c = self.components
        return c[0] + c[4] + c[8]

    def det(self) -> float:
        return float(np.linalg.det(self.as_matrix()))

    def isfinite(self) -> bool:
        return all(math.isfinite(v) for v in self.components)


@dataclass(frozen=True, eq=False)
class SpectralDecomp:
    """Eigenvalues (descending) and an orthonormal right-handed eigenframe.

    ``frame[:, i]`` is the eigenvector of ``eigenvalues[i]``; the frame has
    determinant +1 and a deterministic sign convention so that repeated
    decompositions of the same tensor are bitwise identical.
    """

    eigenvalues: tuple
    frame: np.ndarray

    def reconstruct(self) -> SymTensor3:
        q = self.frame
        lam = np.diag(self.eigenvalues)
        return SymTensor3.from_matrix(q @ lam @ q.T, check=False)


def invariants(a: SymTensor3) -> tuple:
    """Principal invariants (I, II, III) = (tr A, ((tr A)^2 - tr A^2)/2, det A)."""
    i1 = a.trace()
    m = a.as_matrix()
    tr_a2 = float(np.trace(m @ m))
    i2 = 0.5 * (i1 * i1 - tr_a2)
    i3 = a.det()
    return (i1, i2, i3)


def _jacobi_rotate(a: np.ndarray, q: np.ndarray, p: int, r: int) -> None:
    """One Jacobi rotation zeroing a[p, r], accumulating the frame in q."""
    apr = a[p, r]
    if apr == 0.0:
        return
    theta = 0.5 * (a[r, r] - a[p, p]) / apr
    # smaller root of t^2 + 2 theta t - 1 = 0, for numerical stability
    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    rot = np.eye(3)
    rot[p, p] = c
    rot[r, r] = c
    rot[p, r] = s
    rot[r, p] = -s
    a[:] = rot.T @ a @ rot
    a[p, r] = 0.0
    a[r, p] = 0.0
    q[:] = q @ rot


def eig_sym(a: SymTensor3) -> SpectralDecomp:
    """Spectral decomposition of a symmetric tensor by cyclic Jacobi sweeps.

    Eigenvalues are sorted descending. Each eigenvector's sign is fixed
    so its largest-magnitude component is positive; the last column is
    then flipped if needed to keep det(frame) = +1.
    """
    m = a.as_matrix()
    scale = np.linalg.norm(m)
    q = np.eye(3)
    if scale == 0.0:
        return SpectralDecomp((0.0, 0.0, 0.0), q)

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = math.sqrt(m[0, 1] ** 2 + m[0, 2] ** 2 + m[1, 2] ** 2)
        if off <= _JACOBI_OFFDIAG_TOL * scale:
            break
        for p, r in ((0, 1), (0, 2), (1, 2)):
            _jacobi_rotate(m, q, p, r)
    else:
        raise RuntimeError("Jacobi sweep cap exceeded on a symmetric 3x3 input")

    vals = np.diag(m).copy()
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    q = q[:, order]

    # deterministic sign convention
    for i in range(3):
        col = q[:, i]
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0.0:
            q[:, i] = -col
    if np.linalg.det(q) < 0.0:
        q[:, 2] = -q[:, 2]

    return SpectralDecomp(tuple(float(v) for v in vals), q)


def _require_spd(decomp: SpectralDecomp, what: str) -> None:
    lo = decomp.eigenvalues[2]
    hi = decomp.eigenvalues[0]
    if not (lo > SPD_EIG_FLOOR * max(hi, 0.0)):
        raise DomainError(
            f"{what} requires an SPD tensor (eigenvalues {decomp.eigenvalues})"
        )


def is_spd(a: SymTensor3) -> bool:
    d = eig_sym(a)
    return d.eigenvalues[2] > SPD_EIG_FLOOR * max(d.eigenvalues[0], 0.0)


def sqrt_spd(a: SymTensor3) -> SymTensor3:
    """Unique SPD square root, via the spectral decomposition."""
    d = eig_sym(a)
    _require_spd(d, "sqrt_spd")
    q = d.frame
    root = q @ np.diag([math.sqrt(v) for v in d.eigenvalues]) @ q.T
    return SymTensor3.from_matrix(root, check=False)


def inv_spd(a: SymTensor3) -> SymTensor3:
    """Inverse of an SPD tensor, via the spectral decomposition."""
    d = eig_sym(a)
    _require_spd(d, "inv_spd")
    q = d.frame
    inv = q @ np.diag([1.0 / v for v in d.eigenvalues]) @ q.T
    return SymTensor3.from_matrix(inv, check=False)


def _sylvester_from_decomp(d: SpectralDecomp, m: np.ndarray) -> np.ndarray:
    """Sylvester solve A*X + X*A = M in A's eigenbasis (matrix in/out)."""
    q = d.frame
    mt = q.T @ m @ q
    lam = np.array(d.eigenvalues)
    xt = mt / (lam[:, None] + lam[None, :])
    x = q @ xt @ q.T
    return 0.5 * (x + x.T)


def sylvester_spd(a: SymTensor3, m: SymTensor3) -> SymTensor3:
    """Solve A*X + X*A = M for symmetric X, with A SPD.

    In A's eigenbasis the solution is componentwise
    ``X_ij = M_ij / (a_i + a_j)``; positivity of the eigenvalues makes the
    solution unique.
    """
    d = eig_sym(a)
    _require_spd(d, "sylvester_spd")
    return SymTensor3.from_matrix(_sylvester_from_decomp(d, m.as_matrix()), check=False)


def oldroyd(adot: SymTensor3, vel_grad: Tensor3, a: SymTensor3) -> SymTensor3:
    """Frame-indifferent rate: adot - L*A - A*L^T."""
    lm = vel_grad.as_matrix()
    am = a.as_matrix()
    la = lm @ am
    res = adot.as_matrix() - la - la.T
    return SymTensor3.from_matrix(res, check=False)
