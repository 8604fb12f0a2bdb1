"""Right-hand sides of the two elastic flows, explicit time stepping, trajectories.

DLAMBDA is the gradient flow of E + lambda D: f_t = V + phi tau with a
tangential part that drives the parametrisation towards constant speed.
ELAMBDA is the classical elastic flow of E + lambda L with purely normal
velocity. Neither flow is ever remeshed.
"""
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from curveflow import _kernels as K
from curveflow.errors import ConfigError, CurveflowError, DegenerateGrid, NonFinite
from curveflow.grid import CurveState, default_eps_reg, make_workspace


class FlowVariant(str, enum.Enum):
    DLAMBDA = "d-lambda"
    ELAMBDA = "e-lambda"

    @property
    def code(self):
        return K.DLAMBDA if self is FlowVariant.DLAMBDA else K.ELAMBDA


class Integrator(str, enum.Enum):
    EULER = "euler"
    RK4 = "rk4"

    @property
    def code(self):
        return K.EULER if self is Integrator.EULER else K.RK4


class Termination(str, enum.Enum):
    REACHED_HORIZON = "ReachedHorizon"
    DEGENERATE_GRID = "DegenerateGrid"
    NON_FINITE = "NonFinite"


@dataclass(frozen=True)
class StepPolicy:
    """Fixed dt, or adaptive dt = cfl (min|f_x| h)^4 clamped to ``dt_max``."""

    mode: str = "adaptive"
    dt: float = None
    cfl: float = 0.1
    dt_max: float = 1e-3
    integrator: Integrator = Integrator.RK4

    def __post_init__(self):
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        if self.mode == "fixed":
            if self.dt is None or not self.dt > 0:
                raise ConfigError("step.dt", f"must be positive, got {self.dt}")
        elif self.mode == "adaptive":
            if not 0 < self.cfl <= 1:
                raise ConfigError("step.cfl", f"must lie in (0, 1], got {self.cfl}")
            if not self.dt_max > 0:
                raise ConfigError("step.dt_max", f"must be positive, got {self.dt_max}")
        else:
            raise ConfigError("step.mode", f"must be 'adaptive' or 'fixed', got {self.mode!r}")

    @classmethod
    def fixed(cls, dt, integrator=Integrator.RK4):
        return cls(mode="fixed", dt=dt, integrator=integrator)

    @classmethod
    def adaptive(cls, cfl=0.1, dt_max=1e-3, integrator=Integrator.RK4):
        return cls(mode="adaptive", cfl=cfl, dt_max=dt_max, integrator=integrator)

    @property
    def is_adaptive(self):
        return self.mode == "adaptive"


def _check_regular(f, h, eps_reg, vec, sca):
    g = sca[K.G]
    if not np.all(np.isfinite(g)):
        raise NonFinite("non-finite length element")
    gmin = g.min()
    if not gmin > eps_reg:
        raise DegenerateGrid(gmin, eps_reg)


def rhs(curve, lam, variant=FlowVariant.DLAMBDA, eps_reg=None):
    """Velocity field f_t, shape (N, n)."""
    variant = FlowVariant(variant)
    if eps_reg is None:
        eps_reg = default_eps_reg(curve.nodes, curve.h)
    f = np.ascontiguousarray(curve.nodes.T)
    vec, sca = make_workspace(curve.n, curve.N)
    out = np.empty_like(f)
    K.stage_rhs(f, float(lam), curve.h, variant.code, vec, sca, out)
    _check_regular(f, curve.h, eps_reg, vec, sca)
    return out.T.copy()


def stable_dt(cache, policy):
    """Time step for ``policy`` at the state described by ``cache``."""
    if not policy.is_adaptive:
        return policy.dt
    return min(policy.cfl * (cache.fx_norm.min() * cache.h) ** 4, policy.dt_max)


def step(curve, lam, variant, policy, eps_reg=None):
    """Advance ``curve`` by one explicit step; raises NonFinite or DegenerateGrid."""
    variant = FlowVariant(variant)
    h = curve.h
    if eps_reg is None:
        eps_reg = default_eps_reg(curve.nodes, h)
    f = np.ascontiguousarray(curve.nodes.T)
    vec, sca = make_workspace(curve.n, curve.N)
    k1, k2, k3, k4, fnew = (np.empty_like(f) for _ in range(5))
    K.stage_rhs(f, float(lam), h, variant.code, vec, sca, k1)
    _check_regular(f, h, eps_reg, vec, sca)
    if policy.is_adaptive:
        dt = min(policy.cfl * (sca[K.G].min() * h) ** 4, policy.dt_max)
    else:
        dt = policy.dt
    K.integrate(f, dt, float(lam), h, variant.code, policy.integrator.code, vec, sca, k1, k2, k3, k4, fnew)
    if not np.all(np.isfinite(fnew)):
        raise NonFinite(f"non-finite node after step at t = {curve.t + dt}")
    K.geometry_into(fnew, float(lam), h, 2, vec, sca)
    _check_regular(fnew, h, eps_reg, vec, sca)
    return CurveState(fnew.T, curve.t + dt)


@dataclass
class RunSummary:
    """Worst cases over every accepted step of a run."""

    steps: int
    t_final: float
    energy_initial: float
    energy_final: float
    max_energy_increase: float
    max_dissipation_residual: float
    cum_dissipation: float
    max_cum_excess: float
    min_slack_poincare: float
    min_slack_length: float
    min_slack_kappa: float
    min_slack_dirichlet: float
    min_slack_cum: float
    inf_min_fx: float
    max_mesh_ratio: float
    last_dt: float


class Stepper:
    """Owns the node buffer and workspaces of one run; steps in compiled chunks.

    Every accepted state is monitored: energy increase, one-step dissipation
    mismatch, cumulative dissipation and the uniform bounds are folded into
    running extrema, so no step escapes the checks even when diagnostics rows
    are recorded sparsely.
    """

    def __init__(self, curve, lam, variant, policy, eps_reg=None):
        self.variant = FlowVariant(variant)
        self.policy = policy
        self.lam = float(lam)
        self.h = curve.h
        self.t = curve.t
        self.eps_reg = default_eps_reg(curve.nodes, self.h) if eps_reg is None else eps_reg
        self.f = np.ascontiguousarray(curve.nodes.T)
        self.vec, self.sca = make_workspace(curve.n, curve.N)
        self.k = [np.empty_like(self.f) for _ in range(4)]
        self.fnew = np.empty_like(self.f)
        self.obs = np.zeros(K.N_OBS)
        K.observe(self.f, self.lam, self.h, self.variant.code, self.vec, self.sca, self.k[0], self.obs)
        if self.obs[K.O_FINITE] == 0.0:
            raise NonFinite("initial curve has non-finite geometry")
        if not self.obs[K.O_GMIN] > self.eps_reg:
            raise DegenerateGrid(self.obs[K.O_GMIN], self.eps_reg)
        self.energy0 = float(K.energy_of(self.obs, self.lam, self.variant.code))
        acc = np.zeros(K.N_ACC)
        acc[K.A_F] = self.energy0
        acc[K.A_P] = self.obs[K.O_P]
        acc[K.A_GMIN] = self.obs[K.O_GMIN]
        acc[K.A_MAX_INC] = -np.inf
        for slot in (K.A_S_POINC, K.A_S_LEN, K.A_S_KAP, K.A_S_DIR, K.A_S_CUM, K.A_INF_GMIN):
            acc[slot] = np.inf
        acc[K.A_MAX_CUM_EXCESS] = -np.inf
        K.update_slacks(self.obs, self.energy0, self.lam, self.variant.code, acc)
        self.acc = acc
        self.steps = 0
        self.dt_fixed = policy.dt if not policy.is_adaptive else 0.0

    def initial_dt(self):
        if not self.policy.is_adaptive:
            return self.policy.dt
        return min(self.policy.cfl * (self.acc[K.A_GMIN] * self.h) ** 4, self.policy.dt_max)

    def advance(self, t_end, max_steps):
        p = self.policy
        status, t, taken = K.advance(
            self.f, self.t, float(t_end), int(max_steps), self.lam, self.h,
            self.variant.code, p.integrator.code, p.is_adaptive, float(self.dt_fixed),
            float(p.cfl), float(p.dt_max), float(self.eps_reg), self.energy0, self.acc,
            self.vec, self.sca, self.k[0], self.k[1], self.k[2], self.k[3], self.fnew, self.obs,
        )
        self.t = t
        self.steps += taken
        return status

    @property
    def state(self):
        return CurveState(self.f.T, self.t)

    @property
    def energy(self):
        return float(self.acc[K.A_F])

    def summary(self):
        a = self.acc
        return RunSummary(
            steps=self.steps,
            t_final=self.t,
            energy_initial=self.energy0,
            energy_final=float(a[K.A_F]),
            max_energy_increase=float(a[K.A_MAX_INC]),
            max_dissipation_residual=float(a[K.A_MAX_DISS]),
            cum_dissipation=float(a[K.A_CUM]),
            max_cum_excess=float(a[K.A_MAX_CUM_EXCESS]),
            min_slack_poincare=float(a[K.A_S_POINC]),
            min_slack_length=float(a[K.A_S_LEN]),
            min_slack_kappa=float(a[K.A_S_KAP]),
            min_slack_dirichlet=float(a[K.A_S_DIR]) if self.variant is FlowVariant.DLAMBDA else math.nan,
            min_slack_cum=float(a[K.A_S_CUM]),
            inf_min_fx=float(a[K.A_INF_GMIN]),
            max_mesh_ratio=float(a[K.A_MAX_RATIO]),
            last_dt=float(a[K.A_LAST_DT]),
        )


@dataclass
class Trajectory:
    snapshots: list
    diagnostics: list
    termination: Termination
    summary: RunSummary
    residuals: list = field(default_factory=list)
    message: str = ""

    @property
    def final(self):
        return self.snapshots[-1]


def evolve(config, on_snapshot=None, on_record=None, on_residuals=None):
    """Run ``config`` to its horizon or first failure; never raises for step errors.

    Snapshots are taken every ceil(T / (dt0 n_snapshots)) steps (dt0 is the
    first step size) plus the initial and final states; diagnostics rows every
    ``config.diagnostics_every`` steps (0 = a tenth of the snapshot cadence).
    """
    from curveflow import monitor
    from curveflow.presets import make_preset

    curve = make_preset(config.preset, config.preset_params, config.N, config.n, config.seed)
    variant = FlowVariant(config.variant)
    lam = config.lam
    policy = config.step
    stepper = Stepper(curve, lam, variant, policy)
    dt0 = stepper.initial_dt()
    if config.record_residuals and policy.is_adaptive:
        policy = StepPolicy.fixed(dt0, policy.integrator)
        stepper = Stepper(curve, lam, variant, policy)

    T = config.t_end
    snap_every = max(1, math.ceil(T / (dt0 * config.n_snapshots))) if T > 0 else 1
    diag_every = config.diagnostics_every or max(1, snap_every // 10)

    snapshots, rows, residual_rows = [], [], []
    last_row_step = [-1]

    def emit_snapshot(state):
        snapshots.append(state)
        if on_snapshot:
            on_snapshot(state)

    def emit_record(state):
        a = stepper.acc
        rec = monitor.diagnostics_record(
            state, lam, variant, stepper.energy0,
            dt=float(a[K.A_LAST_DT]), diss_res=float(a[K.A_LAST_DISS]), cum_diss=float(a[K.A_CUM]),
            eps_reg=stepper.eps_reg,
        )
        rows.append(rec)
        last_row_step[0] = stepper.steps
        if on_record:
            on_record(rec)
        if config.record_residuals:
            res = monitor.window_residuals(state, lam, variant, policy)
            residual_rows.append(res)
            if on_residuals:
                on_residuals(res)

    state = stepper.state
    emit_snapshot(state)
    emit_record(state)
    termination = Termination.REACHED_HORIZON
    message = ""
    while T > 0:
        s = stepper.steps
        next_event = min(snap_every - s % snap_every, diag_every - s % diag_every)
        status = stepper.advance(T, next_event)
        if status in (K.ST_NONFINITE, K.ST_DEGENERATE):
            if status == K.ST_NONFINITE:
                termination = Termination.NON_FINITE
                message = f"non-finite state after t = {stepper.t:.6g}"
            else:
                termination = Termination.DEGENERATE_GRID
                message = (f"min |f_x| = {stepper.acc[K.A_GMIN]:.3e} <= eps_reg = "
                           f"{stepper.eps_reg:.3e} after t = {stepper.t:.6g}")
            state = stepper.state
            if stepper.steps != last_row_step[0]:
                try:
                    emit_record(state)
                except CurveflowError:
                    pass  # the failed state has no well-defined geometry
            if state.t != snapshots[-1].t:
                emit_snapshot(state)
            break
        reached = status == K.ST_REACHED
        s = stepper.steps
        state = stepper.state
        if s % diag_every == 0 or reached:
            emit_record(state)
        if s % snap_every == 0 or reached:
            emit_snapshot(state)
        if reached:
            break
    return Trajectory(
        snapshots=snapshots,
        diagnostics=rows,
        termination=termination,
        summary=stepper.summary(),
        residuals=residual_rows,
        message=message,
    )
