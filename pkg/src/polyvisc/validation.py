"""Runtime invariant suite: the checks behind the ``validate`` subcommand.

Each check exercises a different leg of the kernel (unimodularity of the
evolved natural configuration, non-negative dissipation, the stress-power
identity, agreement of the tensor integrator with the scalar creep module,
and convergence to the linearized solid). ``quick=True`` shortens the time
horizons and sample counts without loosening any pass criterion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from . import uniaxial
from .dataio import get_preset
from .evolution import dG_rate, replay_uniaxial
from .material import MaterialParams
from .tensors import SymTensor3


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_spd(rng: np.random.Generator) -> SymTensor3:
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    lam = rng.uniform(0.4, 2.5, size=3)
    return SymTensor3.from_matrix(q @ np.diag(lam) @ q.T, check=False)


def run_validation(quick: bool = False) -> List[CheckResult]:
    results: List[CheckResult] = []
    preset = get_preset("pmr15_288")
    mp = preset.params()
    stress = preset.fit_load_pa()
    tau = mp.retardation_time()

    # one tensor trajectory feeds the first four checks
    t_load = (1.0 if quick else 5.0) * tau
    curve = uniaxial.simulate_creep([(stress, t_load)], mp)
    traj = replay_uniaxial(curve, mp)[0]

    det_err = float(np.max(np.abs(traj.det_bp - 1.0)))
    results.append(
        CheckResult("det_drift", det_err <= 1e-8, f"max |det B_p - 1| = {det_err:.3e}")
    )

    xi_min = float(np.min(traj.xi_m))
    results.append(
        CheckResult("dissipation_positivity", xi_min >= 0.0, f"min xi_m = {xi_min:.3e}")
    )

    res_max = float(np.max(traj.identity_residual))
    results.append(
        CheckResult(
            "dissipation_identity", res_max <= 1e-8, f"max residual = {res_max:.3e}"
        )
    )

    # scalar/tensor equivalence on the same creep history
    seg = curve.segments[0]
    b = seg.b
    bp_err = 0.0
    for bp in traj.b_p:
        ref = SymTensor3.diag(b, b**-0.5, b**-0.5)
        bp_err = max(bp_err, (bp - ref).norm() / ref.norm())
    t11_err = float(np.max(np.abs(traj.t_axial - stress))) / stress
    eq_ok = bp_err <= 1e-6 and t11_err <= 1e-6
    results.append(
        CheckResult(
            "general_vs_scalar",
            eq_ok,
            f"max B_p dev = {bp_err:.3e}, max T11 dev = {t11_err:.3e}",
        )
    )

    # convergence to the linearized standard linear solid at small load
    t11 = 1e-3 * mp.mu_p_bar
    horizon = (2.0 if quick else 10.0) * tau
    small = uniaxial.simulate_creep([(t11, horizon)], mp)
    ts = np.linspace(0.0, horizon, 200)
    eps_sim = small.strain_in_segment(0, ts)
    eps_lin = uniaxial.sls_creep_analytic(t11, mp, ts)
    sls_dev = float(np.max(np.abs(eps_sim - eps_lin) / np.abs(eps_lin)))
    results.append(
        CheckResult("sls_limit", sls_dev <= 5e-3, f"max rel deviation = {sls_dev:.3e}")
    )

    # traceless flow direction on random states
    rng = np.random.default_rng(42)
    mp_unit = MaterialParams(mu_p_bar=1.0, mu_g_bar=0.8, eta=1.0)
    n = 50 if quick else 500
    worst = 0.0
    for _ in range(n):
        d_g = dG_rate(_random_spd(rng), _random_spd(rng), mp_unit)
        worst = max(worst, abs(d_g.trace()))
    results.append(
        CheckResult("traceless_flow", worst <= 1e-12, f"max |tr D_G| = {worst:.3e}")
    )

    return results


def all_passed(results: List[CheckResult]) -> bool:
    return all(r.passed for r in results)
