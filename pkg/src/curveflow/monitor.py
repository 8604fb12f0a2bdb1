"""Diagnostics rows and residual checks for the discrete flow.

Every check compares a discrete left-hand side with the corresponding
continuum identity evaluated by the package's own difference operators, so a
consistent O(h^2) scheme drives every residual to zero at second order.
Time derivatives use three-point central differences on equally spaced
windows produced with a fixed step.
"""
import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from curveflow.energies import energies, tol_bound
from curveflow.errors import ConfigError
from curveflow.flow import FlowVariant, Integrator, StepPolicy, rhs, step
from curveflow.grid import dx, fxx_decomposition_residual, geometry, normal_project, qlemma_residual

TWO_PI = 2.0 * math.pi


@dataclass
class DiagnosticsRecord:
    """One timeline row; field order is the CSV column order."""

    t: float
    dt: float
    L: float
    D: float
    E: float
    E_lambda: float
    D_lambda: float
    kappa_l2: float
    nk1: float
    nk2: float
    nk3: float
    phi_l2: float
    v_l2: float
    diss_res: float
    cum_diss: float
    min_fx: float
    max_fx: float
    mesh_ratio: float
    slack_poincare: float
    slack_length: float
    slack_kappa: float
    slack_dirichlet: float
    slack_cum: float
    kappa_tan_res: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_row(self):
        return list(astuple(self))

    def slacks(self):
        return {
            "poincare": self.slack_poincare,
            "length_cap": self.slack_length,
            "kappa_cap": self.slack_kappa,
            "dirichlet_cap": self.slack_dirichlet,
            "cumulative_cap": self.slack_cum,
        }


def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def _vmax(v):
    return float(np.sqrt(_dot(v, v)).max())


def normal_velocity(cache, variant):
    """V of the flow: the cached D_lambda normal velocity, or its E_lambda analogue."""
    if FlowVariant(variant) is FlowVariant.DLAMBDA:
        return cache.V
    return cache.V + cache.lam * (1.0 - cache.fx_norm)[:, None] * cache.kappa


def dissipation_rate(cache, variant=FlowVariant.DLAMBDA):
    """int |V|^2 ds (+ int phi^2 ds for D_lambda)."""
    V = normal_velocity(cache, variant)
    dens = _dot(V, V)
    if FlowVariant(variant) is FlowVariant.DLAMBDA:
        dens = dens + cache.phi**2
    return float(cache.h * np.sum(dens * cache.fx_norm))


def flow_energy(breakdown, variant):
    return breakdown.d_lambda if FlowVariant(variant) is FlowVariant.DLAMBDA else breakdown.e_lambda


def bound_slacks(cache, e, lam, variant, energy0, cum_diss):
    kl2_sq = 2.0 * e.bending
    if FlowVariant(variant) is FlowVariant.DLAMBDA:
        length_cap = 2.0 * math.sqrt(math.pi * energy0 / lam) - e.length
        dirichlet_cap = energy0 / lam - e.dirichlet
    else:
        length_cap = energy0 / lam - e.length
        dirichlet_cap = math.nan
    return {
        "poincare": math.sqrt(e.length) * math.sqrt(kl2_sq) - TWO_PI,
        "length_cap": length_cap,
        "kappa_cap": 2.0 * energy0 - kl2_sq,
        "dirichlet_cap": dirichlet_cap,
        "cumulative_cap": energy0 - cum_diss,
    }


def diagnostics_record(state, lam, variant, energy0, dt=0.0, diss_res=0.0, cum_diss=0.0, eps_reg=None):
    """Full diagnostics of ``state``; ``dt``/``diss_res``/``cum_diss`` come from the stepper."""
    c = geometry(state, lam, m_max=3, eps_reg=eps_reg)
    e = energies(c, lam)
    s = bound_slacks(c, e, lam, variant, energy0, cum_diss)
    g = c.fx_norm
    return DiagnosticsRecord(
        t=state.t,
        dt=dt,
        L=e.length,
        D=e.dirichlet,
        E=e.bending,
        E_lambda=e.e_lambda,
        D_lambda=e.d_lambda,
        kappa_l2=c.l2(c.kappa),
        nk1=c.l2(c.nabla_k[0]),
        nk2=c.l2(c.nabla_k[1]),
        nk3=c.l2(c.nabla_k[2]),
        phi_l2=c.l2(c.phi),
        v_l2=c.l2(normal_velocity(c, variant)),
        diss_res=diss_res,
        cum_diss=cum_diss,
        min_fx=float(g.min()),
        max_fx=float(g.max()),
        mesh_ratio=float(g.max() / g.min()),
        slack_poincare=s["poincare"],
        slack_length=s["length_cap"],
        slack_kappa=s["kappa_cap"],
        slack_dirichlet=s["dirichlet_cap"],
        slack_cum=s["cumulative_cap"],
        kappa_tan_res=float(np.abs(c.kappa_tangential).max()),
    )


def dissipation_residual(prev, nxt, lam, variant=FlowVariant.DLAMBDA):
    """|(F(next) - F(prev))/dt + dissipation(prev)| / max(1, F(prev))."""
    dt = nxt.t - prev.t
    if not dt > 0:
        raise ValueError("states must be consecutive with increasing time")
    c0 = geometry(prev, lam, m_max=2)
    F0 = flow_energy(energies(c0, lam), variant)
    F1 = flow_energy(energies(geometry(nxt, lam, m_max=2), lam), variant)
    return abs((F1 - F0) / dt + dissipation_rate(c0, variant)) / max(1.0, F0)


def make_window(curve, lam, dt, variant=FlowVariant.DLAMBDA, integrator=Integrator.RK4):
    """Three consecutive states of the flow with fixed step ``dt``."""
    policy = StepPolicy.fixed(dt, integrator)
    s1 = step(curve, lam, variant, policy)
    s2 = step(s1, lam, variant, policy)
    return [curve, s1, s2]


def _unpack(window, lam):
    s0, s1, s2 = window
    dt = 0.5 * (s2.t - s0.t)
    if not dt > 0 or not math.isclose(s1.t - s0.t, s2.t - s1.t, rel_tol=1e-6):
        raise ValueError("window states must be equally spaced in time")
    return geometry(s0, lam, 2), geometry(s1, lam, 2), geometry(s2, lam, 2), dt


def fx_pde_residual(window, lam):
    """Length-element PDE: d_t|f_x| = (lam/g) g_xx + lam g_x (1/g)_x - <kappa, V> g."""
    c0, c1, c2, dt = _unpack(window, lam)
    h = c1.h
    g = c1.fx_norm
    lhs = (c2.fx_norm - c0.fx_norm) / (2.0 * dt)
    gx = dx(g, h)
    rhs_ = lam / g * dx(gx, h) + lam * gx * dx(1.0 / g, h) - _dot(c1.kappa, c1.V) * g
    return float(np.abs(lhs - rhs_).max())


def phi_pde_residual(window, lam):
    """Tangential-component PDE: d_t phi = lam g phi_ss - lam g (<kappa, V>)_s."""
    c0, c1, c2, dt = _unpack(window, lam)
    g = c1.fx_norm
    lhs = (c2.phi - c0.phi) / (2.0 * dt)
    rhs_ = lam * g * c1.ds(c1.ds(c1.phi)) - lam * g * c1.ds(_dot(c1.kappa, c1.V))
    return float(np.abs(lhs - rhs_).max())


def lemform_residuals(window, lam, variant=FlowVariant.DLAMBDA, velocity=None):
    """Evolution of ds, tau and kappa for f_t = V + phi tau.

    ``velocity(state)`` gives f_t at the middle state (default: the flow's rhs);
    it is split into its tangential part phi and normal part V.
    """
    c0, c1, c2, dt = _unpack(window, lam)
    mid = window[1]
    u = velocity(mid) if velocity is not None else rhs(mid, lam, variant)
    tau, kap, g = c1.tau, c1.kappa, c1.fx_norm
    phi = _dot(u, tau)
    V = u - phi[:, None] * tau
    kV = _dot(kap, V)
    nabla_V = normal_project(c1.ds(V), tau)

    lhs_a = (c2.fx_norm - c0.fx_norm) / (2.0 * dt)
    rhs_a = (c1.ds(phi) - kV) * g
    lhs_c = (c2.tau - c0.tau) / (2.0 * dt)
    rhs_c = nabla_V + phi[:, None] * kap
    lhs_e = (c2.kappa - c0.kappa) / (2.0 * dt)
    rhs_e = c1.ds(nabla_V) + kV[:, None] * kap + phi[:, None] * c1.ds(kap)
    return {
        "a": float(np.abs(lhs_a - rhs_a).max()),
        "c": _vmax(lhs_c - rhs_c),
        "e": _vmax(lhs_e - rhs_e),
    }


def nablaw_residual(cache, lam=None):
    """max_i |nabla_s w - (|f_x| nabla_s kappa + (phi/lam) kappa)|, w = kappa |f_x|."""
    lam = cache.lam if lam is None else lam
    lhs = normal_project(cache.ds(cache.w), cache.tau)
    rhs_ = cache.fx_norm[:, None] * cache.nabla_k[0] + (cache.phi / lam)[:, None] * cache.kappa
    return _vmax(lhs - rhs_)


def window_residuals(state, lam, variant, policy):
    """All window-based residuals at ``state`` using the fixed step of ``policy``."""
    window = make_window(state, lam, policy.dt, variant, policy.integrator)
    lem = lemform_residuals(window, lam, variant)
    return {
        "t": window[1].t,
        "fx_pde": fx_pde_residual(window, lam),
        "phi_pde": phi_pde_residual(window, lam),
        "lemform_a": lem["a"],
        "lemform_c": lem["c"],
        "lemform_e": lem["e"],
    }


# --- convergence studies ---------------------------------------------------

ORDER_WINDOW = (1.5, 2.5)
WINDOW_CFL = 0.05


@dataclass
class ResidualReport:
    check: str
    preset: str
    grids: list
    residuals: list
    order: float
    window: tuple
    monotone_required: bool
    passed: bool

    def describe(self):
        res = " ".join(f"{r:.3e}" for r in self.residuals)
        crit = "monotone decrease" if self.monotone_required else f"order in [{self.window[0]}, {self.window[1]}]"
        return f"{self.check:<12} {self.preset:<16} grids={self.grids} residuals=[{res}] order={self.order:.3f} ({crit})"


def _window_for(curve, lam, variant):
    c = geometry(curve, lam, m_max=2)
    dt = WINDOW_CFL * (c.fx_norm.min() * c.h) ** 4
    return make_window(curve, lam, dt, variant)


def _window_check(fn):
    def run(curve, lam, variant):
        return fn(_window_for(curve, lam, variant), lam)

    return run


def _lemform(key):
    def run(curve, lam, variant):
        return lemform_residuals(_window_for(curve, lam, variant), lam, variant)[key]

    return run


def _dissipation(curve, lam, variant):
    c = geometry(curve, lam, m_max=2)
    dt = WINDOW_CFL * (c.fx_norm.min() * c.h) ** 4
    nxt = step(curve, lam, variant, StepPolicy.fixed(dt))
    return dissipation_residual(curve, nxt, lam, variant)


CHECKS = {
    "qlemma": lambda curve, lam, variant: qlemma_residual(curve),
    "nablaw": lambda curve, lam, variant: nablaw_residual(geometry(curve, lam, m_max=2)),
    "fxx": lambda curve, lam, variant: fxx_decomposition_residual(curve, lam),
    "lemform_a": _lemform("a"),
    "lemform_c": _lemform("c"),
    "lemform_e": _lemform("e"),
    "fx_pde": _window_check(fx_pde_residual),
    "phi_pde": _window_check(phi_pde_residual),
    "dissipation": _dissipation,
}
MONOTONE_CHECKS = {"dissipation"}


def observed_order(grids, residuals):
    """Least-squares slope of log(residual) against log(h)."""
    h = 2.0 * np.pi / np.asarray(grids, dtype=float)
    r = np.asarray(residuals, dtype=float)
    slope, _ = np.polyfit(np.log(h), np.log(r), 1)
    return float(slope)


def convergence_study(check, preset, grids, lam=0.5, variant=FlowVariant.DLAMBDA,
                      preset_params=None, n=2, seed=0):
    """Run ``check`` on ``preset`` at each grid size and fit the observed order."""
    from curveflow.presets import make_preset

    if check not in CHECKS:
        raise ConfigError("check", f"unknown check {check!r}; choose from {sorted(CHECKS)}")
    grids = [int(N) for N in grids]
    if len(grids) < 3:
        raise ConfigError("grids", "need at least 3 grid sizes")
    if any(b <= a for a, b in zip(grids, grids[1:])):
        raise ConfigError("grids", "grid sizes must be strictly increasing")
    fn = CHECKS[check]
    residuals = [fn(make_preset(preset, preset_params, N, n, seed), lam, variant) for N in grids]
    order = observed_order(grids, residuals)
    monotone = check in MONOTONE_CHECKS
    if monotone:
        passed = all(b < a for a, b in zip(residuals, residuals[1:]))
    else:
        passed = ORDER_WINDOW[0] <= order <= ORDER_WINDOW[1]
    return ResidualReport(check, preset, grids, residuals, order, ORDER_WINDOW, monotone, passed)


@dataclass
class SlackCheck:
    name: str
    value: float
    tol: float

    @property
    def passed(self):
        return self.value >= -self.tol


def slack_checks(curve, lam):
    """Static inequalities on a single curve: Poincare, length domination, sup|f_x| embedding."""
    from curveflow.energies import length_domination_slack, poincare_slack, sup_fx_embedding_slack

    c = geometry(curve, lam, m_max=2)
    tol = tol_bound(curve.h)
    return [
        SlackCheck("poincare", poincare_slack(c), tol),
        SlackCheck("length_dom", length_domination_slack(energies(c, lam)), tol),
        SlackCheck("sup_fx", sup_fx_embedding_slack(c), tol),
    ]
