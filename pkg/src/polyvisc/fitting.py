"""Creep-error objective and derivative-free parameter estimation.

The objective is the weighted relative L2 misfit between simulated and
measured strains, split into loading and unloading phases:

    error = w * sqrt(sum((e_sim - e_exp)^2) / sum(e_exp^2))   [load]
          + (1-w) * (same for the unload phase)

Simulated strains are interpolated from the creep solver's dense output at
the experimental time stamps, so the objective is smooth in the parameters.
Minimization runs over the logarithms of (mu_p_bar, mu_g_bar, eta), which
keeps the parameters positive without constraint handling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .material import MaterialParams
from .odesolve import IntegrationError
from .tensors import DomainError
from .uniaxial import CreepSegment, simulate_creep

# Objective value reported when the simulation fails for a parameter set;
# large enough that the simplex always retreats from it.
PENALTY = 1e6


@dataclass
class ExperimentalDataset:
    """Measured creep/recovery strains under one constant load."""

    t_load: np.ndarray
    eps_load: np.ndarray
    t_unload: np.ndarray
    eps_unload: np.ndarray
    stress: float  # Pa, applied during the load phase (zero on unload)
    temperature_c: Optional[float] = None
    provenance: str = ""
    unload_start: Optional[float] = None  # defaults to the last load stamp

    def __post_init__(self):
        self.t_load = np.asarray(self.t_load, dtype=float)
        self.eps_load = np.asarray(self.eps_load, dtype=float)
        self.t_unload = np.asarray(self.t_unload, dtype=float)
        self.eps_unload = np.asarray(self.eps_unload, dtype=float)
        if self.t_load.size < 2:
            raise ValueError("load phase needs at least 2 samples")
        if np.any(np.diff(self.t_load) <= 0.0):
            raise ValueError("load times must be strictly increasing")
        if self.t_unload.size and np.any(np.diff(self.t_unload) <= 0.0):
            raise ValueError("unload times must be strictly increasing")
        if not math.isfinite(self.stress):
            raise ValueError("stress must be finite")
        if self.t_unload.size and self.t_unload[0] < self.t_load[-1]:
            raise ValueError("unload times must not precede the load phase")

    @property
    def has_unload(self) -> bool:
        return self.t_unload.size > 0

    def t_unload_start(self) -> float:
        """When the stress is removed: explicit metadata or the last load stamp."""
        if self.unload_start is not None:
            return float(self.unload_start)
        return float(self.t_load[-1])


@dataclass
class FitConfig:
    """Weight, initial guess and simplex controls for a creep fit."""

    weight: float = 0.5
    initial: Optional[Sequence[float]] = None  # (mu_p_bar, mu_g_bar, eta)
    xtol: float = 1e-8  # relative simplex diameter at termination
    ftol: float = 1e-12  # objective spread at termination
    max_iter: int = 2000
    step: float = 0.25  # initial simplex spread (log-parameter units)
    rtol: float = 1e-8  # creep solver tolerance inside the objective

    def __post_init__(self):
        if not (0.0 <= self.weight <= 1.0):
            raise ValueError(f"weight must lie in [0, 1], got {self.weight}")
        if self.initial is not None and any(v <= 0.0 for v in self.initial):
            raise ValueError("initial parameter guess must be strictly positive")


@dataclass
class FitResult:
    params: MaterialParams
    error: float
    iterations: int
    converged: bool
    weight: float

    def to_dict(self) -> dict:
        return {
            "mu_p_bar": self.params.mu_p_bar,
            "mu_g_bar": self.params.mu_g_bar,
            "eta": self.params.eta,
            "error": self.error,
            "iterations": self.iterations,
            "converged": self.converged,
            "w": self.weight,
        }


def _phase_term(eps_sim: np.ndarray, eps_exp: np.ndarray) -> float:
    denom = float(np.sum(eps_exp * eps_exp))
    num = float(np.sum((eps_sim - eps_exp) ** 2))
    if denom == 0.0:
        return 0.0 if num == 0.0 else PENALTY
    return math.sqrt(num / denom)


def creep_error(
    mp: MaterialParams,
    ds: ExperimentalDataset,
    w: float,
    rtol: float = 1e-8,
) -> float:
    """Weighted relative misfit of the simulated creep curve to the dataset.

    With no unload samples the unload term is defined as zero and the
    weight is forced to 1. Simulation failures return the PENALTY sentinel
    instead of raising, so optimizers can retreat.
    """
    if not ds.has_unload:
        w = 1.0
    t_u = ds.t_unload_start()
    segments = [CreepSegment(ds.stress, t_u)]
    if ds.has_unload:
        t_end = float(ds.t_unload[-1])
        if not (t_end > t_u):
            raise ValueError("unload phase must extend past the unload start")
        segments.append(CreepSegment(0.0, t_end - t_u))

    try:
        curve = simulate_creep(segments, mp, rtol=rtol)
        eps_sim_load = curve.strain_in_segment(0, ds.t_load)
        term = w * _phase_term(eps_sim_load, ds.eps_load)
        if ds.has_unload and w < 1.0:
            eps_sim_unload = curve.strain_in_segment(1, ds.t_unload)
            term += (1.0 - w) * _phase_term(eps_sim_unload, ds.eps_unload)
        return term
    except (IntegrationError, DomainError, ValueError):
        return PENALTY


@dataclass
class SimplexResult:
    """Best vertex of a Nelder-Mead run."""

    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    n_fev: int


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0,
    *,
    step: float = 0.05,
    xtol: float = 1e-8,
    ftol: float = 1e-12,
    max_iter: int = 2000,
) -> SimplexResult:
    """Minimize f by the Nelder-Mead simplex method.

    Standard coefficients (reflection 1, expansion 2, contraction 0.5,
    shrink 0.5). Terminates when the simplex diameter drops below ``xtol``
    and the objective spread below ``ftol``, or at the iteration cap
    (reported via ``converged``). The diameter is measured in the search
    coordinates, which callers are expected to scale (the creep fit runs
    over log-parameters, so xtol is a relative parameter tolerance there).
    The returned vertex is never worse than f(x0).
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    verts = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        v[i] += step  # absolute offsets; callers scale their own coordinates
        verts.append(v)
    verts = np.array(verts)
    fvals = np.array([f(v) for v in verts])
    n_fev = n + 1

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    iterations = 0
    converged = False

    while iterations < max_iter:
        order = np.argsort(fvals, kind="stable")
        verts = verts[order]
        fvals = fvals[order]

        diam = float(np.max(np.abs(verts[1:] - verts[0])))
        if diam < xtol and (fvals[-1] - fvals[0]) < ftol:
            converged = True
            break

        iterations += 1
        centroid = np.mean(verts[:-1], axis=0)
        reflected = centroid + alpha * (centroid - verts[-1])
        f_r = f(reflected)
        n_fev += 1

        if fvals[0] <= f_r < fvals[-2]:
            verts[-1], fvals[-1] = reflected, f_r
        elif f_r < fvals[0]:
            expanded = centroid + gamma * (reflected - centroid)
            f_e = f(expanded)
            n_fev += 1
            if f_e < f_r:
                verts[-1], fvals[-1] = expanded, f_e
            else:
                verts[-1], fvals[-1] = reflected, f_r
        else:
            if f_r < fvals[-1]:  # outside contraction
                contracted = centroid + rho * (reflected - centroid)
            else:  # inside contraction
                contracted = centroid - rho * (centroid - verts[-1])
            f_c = f(contracted)
            n_fev += 1
            if f_c < min(f_r, fvals[-1]):
                verts[-1], fvals[-1] = contracted, f_c
            else:  # shrink toward the best vertex
                for i in range(1, n + 1):
                    verts[i] = verts[0] + sigma * (verts[i] - verts[0])
                    fvals[i] = f(verts[i])
                n_fev += n

    order = np.argsort(fvals, kind="stable")
    best = order[0]
    return SimplexResult(
        x=verts[best].copy(),
        fun=float(fvals[best]),
        iterations=iterations,
        converged=converged,
        n_fev=n_fev,
    )


def fit_dataset(ds: ExperimentalDataset, cfg: FitConfig) -> FitResult:
    """Fit (mu_p_bar, mu_g_bar, eta) to one dataset by simplex search.

    The search runs over log-parameters so every trial set is positive;
    non-convergence is reported on the result, not raised.
    """
    if cfg.initial is None:
        raise ValueError("FitConfig.initial is required for fitting")
    x0 = np.log(np.asarray(cfg.initial, dtype=float))

    def objective(logp: np.ndarray) -> float:
        mu_p, mu_g, eta = np.exp(logp)
        try:
            mp = MaterialParams(mu_p_bar=mu_p, mu_g_bar=mu_g, eta=eta)
        except ValueError:
            return PENALTY
        return creep_error(mp, ds, cfg.weight, rtol=cfg.rtol)

    res = nelder_mead(
        objective,
        x0,
        step=cfg.step,
        xtol=cfg.xtol,
        ftol=cfg.ftol,
        max_iter=cfg.max_iter,
    )
    mu_p, mu_g, eta = np.exp(res.x)
    return FitResult(
        params=MaterialParams(mu_p_bar=float(mu_p), mu_g_bar=float(mu_g), eta=float(eta)),
        error=res.fun,
        iterations=res.iterations,
        converged=res.converged,
        weight=cfg.weight if ds.has_unload else 1.0,
    )
