"""Compiled inner loops for geometry evaluation and time stepping.

Curves are stored component-major here: N nodes in R^n live in an (n, N)
C-contiguous float64 array so every stencil loop runs over contiguous
memory. The public modules transpose to the (N, n) layout.

Workspaces are preallocated by the caller and reused across steps; the
functions below never allocate inside the stepping loop.
"""
import math

import numpy as np
from numba import njit

# "contract" (FMA) and "arcp" only: NaN/Inf semantics must survive so the
# non-finite checks below are not optimised away.
_JIT = dict(cache=True, error_model="numpy", fastmath={"contract", "arcp"})

# vector workspace slots, each (n, N)
FX, TAU, KAP, DK, NK1, NK2, NK3, VEL, TMP = range(9)
N_VEC = 9
# scalar workspace slots, each (N,)
G, IG, GX, PHI, K2, PR, AUX = range(7)
N_SCA = 7

DLAMBDA = 0
ELAMBDA = 1
EULER = 0
RK4 = 1

# observation vector
O_L, O_D, O_E, O_K2, O_P, O_GMIN, O_GMAX, O_FINITE = range(8)
N_OBS = 8

# accumulator vector carried across calls to advance()
(A_F, A_P, A_GMIN, A_CUM, A_MAX_INC, A_MAX_DISS, A_LAST_DISS, A_LAST_DT,
 A_S_POINC, A_S_LEN, A_S_KAP, A_S_DIR, A_S_CUM, A_INF_GMIN, A_MAX_CUM_EXCESS,
 A_STEPS, A_MAX_RATIO) = range(17)
N_ACC = 17

# advance() status codes
ST_CHUNK = 0
ST_REACHED = 1
ST_NONFINITE = 2
ST_DEGENERATE = 3

TWO_PI = 2.0 * math.pi


@njit(**_JIT)
def cdx(u, c, out):
    """Central difference with periodic wrap; ``c`` is 1/(2h)."""
    N = u.shape[0]
    out[0] = (u[1] - u[N - 1]) * c
    for i in range(1, N - 1):
        out[i] = (u[i + 1] - u[i - 1]) * c
    out[N - 1] = (u[0] - u[N - 2]) * c


@njit(**_JIT)
def cdd(u, c2, out):
    """Compact second difference with periodic wrap; ``c2`` is 1/h^2."""
    N = u.shape[0]
    out[0] = (u[1] - 2.0 * u[0] + u[N - 1]) * c2
    for i in range(1, N - 1):
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * c2
    out[N - 1] = (u[0] - 2.0 * u[N - 1] + u[N - 2]) * c2


@njit(**_JIT)
def _project(v, tau, dots, n, N):
    for i in range(N):
        dots[i] = 0.0
    for d in range(n):
        for i in range(N):
            dots[i] += v[d, i] * tau[d, i]
    for d in range(n):
        for i in range(N):
            v[d, i] -= dots[i] * tau[d, i]


@njit(**_JIT)
def geometry_into(f, lam, h, m_max, vec, sca):
    """Fill the workspaces with |f_x|, tau, kappa, nabla_s^m kappa, phi and V.

    kappa = ds(tau) is left unprojected. nabla_s kappa and nabla_s^3 kappa are
    ds followed by projection; nabla_s^2 kappa evaluates the inner d_s d_s
    with the compact three-point stencil, which couples odd and even nodes.
    """
    n, N = f.shape
    c = 0.5 / h
    c2 = 1.0 / (h * h)
    fx = vec[FX]
    tau = vec[TAU]
    kap = vec[KAP]
    dk = vec[DK]
    nk1 = vec[NK1]
    nk2 = vec[NK2]
    nk3 = vec[NK3]
    vel = vec[VEL]
    tmp = vec[TMP]
    g = sca[G]
    ig = sca[IG]
    gx = sca[GX]
    phi = sca[PHI]
    k2 = sca[K2]
    pr = sca[PR]
    aux = sca[AUX]

    for d in range(n):
        cdx(f[d], c, fx[d])
    for i in range(N):
        g[i] = 0.0
    for d in range(n):
        for i in range(N):
            g[i] += fx[d, i] * fx[d, i]
    for i in range(N):
        g[i] = math.sqrt(g[i])
        ig[i] = 1.0 / g[i]
    for d in range(n):
        for i in range(N):
            tau[d, i] = fx[d, i] * ig[i]

    # kappa = ds(tau); dk = ds(kappa); nk1 = P dk
    for d in range(n):
        cdx(tau[d], c, kap[d])
        for i in range(N):
            kap[d, i] *= ig[i]
    for d in range(n):
        cdx(kap[d], c, dk[d])
        for i in range(N):
            dk[d, i] *= ig[i]
            nk1[d, i] = dk[d, i]
    _project(nk1, tau, pr, n, N)  # pr = <ds kappa, tau>

    cdx(g, c, gx)
    for i in range(N):
        phi[i] = lam * gx[i] * ig[i]

    # nabla_s^2 kappa = P d_s^2 kappa - <d_s kappa, tau> P kappa
    for d in range(n):
        cdd(kap[d], c2, tmp[d])
        for i in range(N):
            tmp[d, i] = (tmp[d, i] - gx[i] * dk[d, i]) * ig[i] * ig[i]
    _project(tmp, tau, aux, n, N)
    for i in range(N):
        aux[i] = 0.0
    for d in range(n):
        for i in range(N):
            aux[i] += kap[d, i] * tau[d, i]
    for d in range(n):
        for i in range(N):
            nk2[d, i] = tmp[d, i] - pr[i] * (kap[d, i] - aux[i] * tau[d, i])

    for i in range(N):
        k2[i] = 0.0
    for d in range(n):
        for i in range(N):
            k2[i] += kap[d, i] * kap[d, i]
    for i in range(N):
        aux[i] = lam * g[i] - 0.5 * k2[i]
    for d in range(n):
        for i in range(N):
            vel[d, i] = aux[i] * kap[d, i] - nk2[d, i]

    if m_max >= 3:
        for d in range(n):
            cdx(nk2[d], c, nk3[d])
            for i in range(N):
                nk3[d, i] *= ig[i]
        _project(nk3, tau, aux, n, N)


@njit(**_JIT)
def velocity_into(variant, lam, vec, sca, out):
    """Right-hand side from a filled workspace."""
    n, N = out.shape
    kap = vec[KAP]
    if variant == DLAMBDA:
        vel = vec[VEL]
        tau = vec[TAU]
        phi = sca[PHI]
        for d in range(n):
            for i in range(N):
                out[d, i] = vel[d, i] + phi[i] * tau[d, i]
    else:
        nk2 = vec[NK2]
        k2 = sca[K2]
        for d in range(n):
            for i in range(N):
                out[d, i] = (lam - 0.5 * k2[i]) * kap[d, i] - nk2[d, i]


@njit(**_JIT)
def rhs_into(f, lam, h, variant, vec, sca, out):
    geometry_into(f, lam, h, 2, vec, sca)
    velocity_into(variant, lam, vec, sca, out)


# --- planar fast path ------------------------------------------------------
# Three fused node loops with the periodic ends peeled so the interior loops
# vectorise. Only what the velocity and the monitor need is stored: g, 1/g,
# tau, kappa, |kappa|^2, phi and the D_lambda normal velocity V.


@njit(inline="always", **_JIT)
def _p_tangent(f, c, tau, g, ig, i, ip, im):
    ax = (f[0, ip] - f[0, im]) * c
    ay = (f[1, ip] - f[1, im]) * c
    gi = math.sqrt(ax * ax + ay * ay)
    r = 1.0 / gi
    g[i] = gi
    ig[i] = r
    tau[0, i] = ax * r
    tau[1, i] = ay * r


@njit(inline="always", **_JIT)
def _p_curvature(tau, ig, c, kap, i, ip, im):
    r = ig[i] * c
    kap[0, i] = (tau[0, ip] - tau[0, im]) * r
    kap[1, i] = (tau[1, ip] - tau[1, im]) * r


@njit(inline="always", **_JIT)
def _p_velocity(tau, kap, g, ig, c, c2, lam, dlam, out, vel, phi, k2, i, ip, im):
    r = ig[i]
    tx = tau[0, i]
    ty = tau[1, i]
    kx = kap[0, i]
    ky = kap[1, i]
    q = (g[ip] - g[im]) * c
    dx_ = (kap[0, ip] - kap[0, im]) * c * r
    dy_ = (kap[1, ip] - kap[1, im]) * c * r
    p = dx_ * tx + dy_ * ty
    wx = ((kap[0, ip] - 2.0 * kx + kap[0, im]) * c2 - q * dx_) * r * r
    wy = ((kap[1, ip] - 2.0 * ky + kap[1, im]) * c2 - q * dy_) * r * r
    s = wx * tx + wy * ty
    kt = kx * tx + ky * ty
    wx = wx - s * tx - p * (kx - kt * tx)
    wy = wy - s * ty - p * (ky - kt * ty)
    kk = kx * kx + ky * ky
    k2[i] = kk
    a = lam * g[i] - 0.5 * kk
    vx = a * kx - wx
    vy = a * ky - wy
    vel[0, i] = vx
    vel[1, i] = vy
    ph = lam * q * r
    phi[i] = ph
    if dlam:
        out[0, i] = vx + ph * tx
        out[1, i] = vy + ph * ty
    else:
        b = lam - 0.5 * kk
        out[0, i] = b * kx - wx
        out[1, i] = b * ky - wy


@njit(**_JIT)
def planar_rhs_into(f, lam, h, variant, vec, sca, out):
    """rhs for n = 2; agrees with rhs_into up to rounding."""
    N = f.shape[1]
    c = 0.5 / h
    c2 = 1.0 / (h * h)
    dlam = variant == DLAMBDA
    tau = vec[TAU]
    kap = vec[KAP]
    vel = vec[VEL]
    g = sca[G]
    ig = sca[IG]
    phi = sca[PHI]
    k2 = sca[K2]
    _p_tangent(f, c, tau, g, ig, 0, 1, N - 1)
    for i in range(1, N - 1):
        _p_tangent(f, c, tau, g, ig, i, i + 1, i - 1)
    _p_tangent(f, c, tau, g, ig, N - 1, 0, N - 2)
    _p_curvature(tau, ig, c, kap, 0, 1, N - 1)
    for i in range(1, N - 1):
        _p_curvature(tau, ig, c, kap, i, i + 1, i - 1)
    _p_curvature(tau, ig, c, kap, N - 1, 0, N - 2)
    _p_velocity(tau, kap, g, ig, c, c2, lam, dlam, out, vel, phi, k2, 0, 1, N - 1)
    for i in range(1, N - 1):
        _p_velocity(tau, kap, g, ig, c, c2, lam, dlam, out, vel, phi, k2, i, i + 1, i - 1)
    _p_velocity(tau, kap, g, ig, c, c2, lam, dlam, out, vel, phi, k2, N - 1, 0, N - 2)


@njit(**_JIT)
def stage_rhs(f, lam, h, variant, vec, sca, out):
    """rhs used by the integrators: planar fast path when n = 2."""
    if f.shape[0] == 2:
        planar_rhs_into(f, lam, h, variant, vec, sca, out)
    else:
        rhs_into(f, lam, h, variant, vec, sca, out)


@njit(**_JIT)
def observe(f, lam, h, variant, vec, sca, k_out, obs):
    """rhs into ``k_out`` plus the scalar quadratures the monitor needs."""
    stage_rhs(f, lam, h, variant, vec, sca, k_out)
    n, N = f.shape
    g = sca[G]
    k2 = sca[K2]
    phi = sca[PHI]
    vel = vec[VEL]
    L = 0.0
    D = 0.0
    E = 0.0
    P = 0.0
    gmin = np.inf
    gmax = 0.0
    finite = True
    for i in range(N):
        gi = g[i]
        L += gi
        D += gi * gi
        E += k2[i] * gi
        if gi < gmin:
            gmin = gi
        if gi > gmax:
            gmax = gi
        if variant == DLAMBDA:
            s = phi[i] * phi[i]
            for d in range(n):
                s += vel[d, i] * vel[d, i]
        else:
            s = 0.0
            for d in range(n):
                s += k_out[d, i] * k_out[d, i]
        P += s * gi
        if not math.isfinite(s) or not math.isfinite(gi):
            finite = False
    obs[O_L] = h * L
    obs[O_D] = 0.5 * h * D
    obs[O_E] = 0.5 * h * E
    obs[O_K2] = h * E
    obs[O_P] = h * P
    obs[O_GMIN] = gmin
    obs[O_GMAX] = gmax
    obs[O_FINITE] = 1.0 if (finite and math.isfinite(obs[O_E])) else 0.0


@njit(**_JIT)
def energy_of(obs, lam, variant):
    if variant == DLAMBDA:
        return obs[O_E] + lam * obs[O_D]
    return obs[O_E] + lam * obs[O_L]


@njit(**_JIT)
def integrate(f, dt, lam, h, variant, integrator, vec, sca, k1, k2, k3, k4, fnew):
    """One explicit step from ``f``; ``k1`` must already hold rhs(f)."""
    n, N = f.shape
    if integrator == EULER:
        for d in range(n):
            for i in range(N):
                fnew[d, i] = f[d, i] + dt * k1[d, i]
        return
    half = 0.5 * dt
    for d in range(n):
        for i in range(N):
            fnew[d, i] = f[d, i] + half * k1[d, i]
    stage_rhs(fnew, lam, h, variant, vec, sca, k2)
    for d in range(n):
        for i in range(N):
            fnew[d, i] = f[d, i] + half * k2[d, i]
    stage_rhs(fnew, lam, h, variant, vec, sca, k3)
    for d in range(n):
        for i in range(N):
            fnew[d, i] = f[d, i] + dt * k3[d, i]
    stage_rhs(fnew, lam, h, variant, vec, sca, k4)
    sixth = dt / 6.0
    for d in range(n):
        for i in range(N):
            fnew[d, i] = f[d, i] + sixth * (k1[d, i] + 2.0 * k2[d, i] + 2.0 * k3[d, i] + k4[d, i])


@njit(**_JIT)
def update_slacks(obs, F0, lam, variant, acc):
    L = obs[O_L]
    kl2 = obs[O_K2]
    s = math.sqrt(L) * math.sqrt(kl2) - TWO_PI
    if s < acc[A_S_POINC]:
        acc[A_S_POINC] = s
    s = 2.0 * F0 - kl2
    if s < acc[A_S_KAP]:
        acc[A_S_KAP] = s
    if variant == DLAMBDA:
        s = F0 / lam - obs[O_D]
        if s < acc[A_S_DIR]:
            acc[A_S_DIR] = s
        s = 2.0 * math.sqrt(math.pi * F0 / lam) - L
    else:
        s = F0 / lam - L
    if s < acc[A_S_LEN]:
        acc[A_S_LEN] = s
    s = F0 - acc[A_CUM]
    if s < acc[A_S_CUM]:
        acc[A_S_CUM] = s
    if obs[O_GMIN] < acc[A_INF_GMIN]:
        acc[A_INF_GMIN] = obs[O_GMIN]
    r = obs[O_GMAX] / obs[O_GMIN]
    if r > acc[A_MAX_RATIO]:
        acc[A_MAX_RATIO] = r


@njit(**_JIT)
def advance(f, t, t_end, max_steps, lam, h, variant, integrator, adaptive, dt_fixed,
            cfl, dt_max, eps_reg, F0, acc, vec, sca, k1, k2, k3, k4, fnew, obs):
    """Step ``f`` in place until ``t_end`` or ``max_steps`` accepted steps.

    On entry ``k1`` holds rhs(f) and ``acc`` the monitor state at ``f``. Every
    accepted state is checked for energy increase, dissipation mismatch and
    the uniform bounds; a rejected step leaves ``f`` and ``t`` untouched.
    Returns (status, t, accepted steps).
    """
    steps = 0
    status = ST_CHUNK
    tol_t = 1e-12 * max(1.0, abs(t_end))
    while steps < max_steps:
        remaining = t_end - t
        if remaining <= tol_t:
            status = ST_REACHED
            break
        if adaptive:
            dt = cfl * (acc[A_GMIN] * h) ** 4
            if dt > dt_max:
                dt = dt_max
        else:
            dt = dt_fixed
        if dt > remaining:
            dt = remaining
        integrate(f, dt, lam, h, variant, integrator, vec, sca, k1, k2, k3, k4, fnew)
        # a non-finite node makes |f_x| non-finite at its neighbours
        observe(fnew, lam, h, variant, vec, sca, k1, obs)
        if obs[O_FINITE] == 0.0:
            status = ST_NONFINITE
            break
        if obs[O_GMIN] <= eps_reg:
            acc[A_GMIN] = obs[O_GMIN]
            status = ST_DEGENERATE
            break
        f[:, :] = fnew
        t += dt
        steps += 1

        F_new = energy_of(obs, lam, variant)
        F_old = acc[A_F]
        inc = F_new - F_old
        if inc > acc[A_MAX_INC]:
            acc[A_MAX_INC] = inc
        diss = abs(inc / dt + acc[A_P]) / max(1.0, F_old)
        if diss > acc[A_MAX_DISS]:
            acc[A_MAX_DISS] = diss
        acc[A_LAST_DISS] = diss
        acc[A_LAST_DT] = dt
        acc[A_CUM] += dt * acc[A_P]
        excess = acc[A_CUM] - (F0 - F_new)
        if excess > acc[A_MAX_CUM_EXCESS]:
            acc[A_MAX_CUM_EXCESS] = excess
        acc[A_F] = F_new
        acc[A_P] = obs[O_P]
        acc[A_GMIN] = obs[O_GMIN]
        acc[A_STEPS] += 1.0
        update_slacks(obs, F0, lam, variant, acc)
    if status == ST_CHUNK and t_end - t <= tol_t:
        status = ST_REACHED
    return status, t, steps
