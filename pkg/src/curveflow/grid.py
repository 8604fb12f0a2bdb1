"""Periodic parameter grid, difference operators and pointwise curve geometry.

A closed curve is sampled at N equispaced parameters x_i = 2*pi*i/N. Fields
are plain numpy arrays: shape (N,) for scalars and (N, n) for vectors in R^n.
"""
from dataclasses import dataclass, field

import numpy as np

from curveflow import _kernels as K
from curveflow.errors import CurveflowError, DegenerateGrid, NonFinite

TOL_NORMAL = 1e-10
EPS_REG_FACTOR = 1e-12


@dataclass(frozen=True, eq=False)
class CurveState:
    """N periodic nodes in R^n at time ``t``; ``nodes`` has shape (N, n)."""

    nodes: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=np.float64, copy=True)
        if nodes.ndim != 2:
            raise CurveflowError(f"nodes must be a 2-d array (N, n), got shape {nodes.shape}")
        N, n = nodes.shape
        if n < 2:
            raise CurveflowError(f"ambient dimension must be >= 2, got {n}")
        if N < 8 or N % 2:
            raise CurveflowError(f"node count must be even and >= 8, got {N}")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "t", float(self.t))

    @property
    def N(self):
        return self.nodes.shape[0]

    @property
    def n(self):
        return self.nodes.shape[1]

    @property
    def h(self):
        return 2.0 * np.pi / self.N

    @property
    def x(self):
        return self.h * np.arange(self.N)

    def with_nodes(self, nodes, t=None):
        return CurveState(nodes, self.t if t is None else t)

    def __eq__(self, other):
        if not isinstance(other, CurveState):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.nodes, other.nodes)

    __hash__ = None


def dx(u, h):
    """Second-order central difference along the grid axis, periodic."""
    u = np.asarray(u, dtype=np.float64)
    return (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * h)


def ds(u, fx_norm, h, eps_reg=0.0):
    """Arc-length derivative (1/|f_x|) dx(u)."""
    fx_norm = np.asarray(fx_norm, dtype=np.float64)
    gmin = fx_norm.min()
    if not gmin > eps_reg:
        raise DegenerateGrid(gmin, eps_reg)
    d = dx(u, h)
    return d / fx_norm if d.ndim == 1 else d / fx_norm[:, None]


def normal_project(v, tau):
    """Remove the component of ``v`` along the unit tangent ``tau``, node by node."""
    v = np.asarray(v, dtype=np.float64)
    return v - np.einsum("ij,ij->i", v, tau)[:, None] * tau


def default_eps_reg(nodes, h):
    g = np.linalg.norm(dx(nodes, h), axis=1)
    return EPS_REG_FACTOR * float(g.mean())


@dataclass(frozen=True, eq=False)
class GeometryCache:
    """Pointwise geometric quantities of one curve.

    ``nabla_k[m - 1]`` holds nabla_s^m kappa. ``kappa`` is the raw ds(tau); its
    tangential part is a discretisation residual, see ``kappa_tangential``.
    """

    h: float
    lam: float
    fx_norm: np.ndarray
    tau: np.ndarray
    kappa: np.ndarray
    nabla_k: list = field(repr=False)
    phi: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    @property
    def N(self):
        return self.fx_norm.shape[0]

    @property
    def kappa_sq(self):
        return np.einsum("ij,ij->i", self.kappa, self.kappa)

    @property
    def kappa_tangential(self):
        return np.einsum("ij,ij->i", self.kappa, self.tau)

    def ds(self, u):
        return ds(u, self.fx_norm, self.h)

    def l2(self, u):
        """Arc-length L2 norm h * sum |u_i|^2 |f_x|_i, square-rooted."""
        u = np.asarray(u)
        sq = u * u if u.ndim == 1 else np.einsum("ij,ij->i", u, u)
        return float(np.sqrt(self.h * np.sum(sq * self.fx_norm)))


def make_workspace(n, N):
    vec = np.zeros((K.N_VEC, n, N))
    sca = np.zeros((K.N_SCA, N))
    return vec, sca


def geometry(curve, lam, m_max=3, eps_reg=None):
    """Evaluate |f_x|, tau, kappa, nabla_s^m kappa (m <= m_max), phi, V and w."""
    if m_max < 2:
        raise ValueError("m_max must be >= 2 (V needs nabla_s^2 kappa)")
    h = curve.h
    if eps_reg is None:
        eps_reg = default_eps_reg(curve.nodes, h)
    f = np.ascontiguousarray(curve.nodes.T)
    if not np.all(np.isfinite(f)):
        raise NonFinite("curve has non-finite nodes")
    vec, sca = make_workspace(curve.n, curve.N)
    K.geometry_into(f, float(lam), h, min(m_max, 3), vec, sca)
    g = sca[K.G].copy()
    gmin = g.min()
    if not gmin > eps_reg:
        raise DegenerateGrid(gmin, eps_reg)

    tau = vec[K.TAU].T.copy()
    kappa = vec[K.KAP].T.copy()
    nabla = [vec[K.NK1].T.copy(), vec[K.NK2].T.copy()]
    if m_max >= 3:
        nabla.append(vec[K.NK3].T.copy())
    for _ in range(4, m_max + 1):
        nabla.append(normal_project(ds(nabla[-1], g, h), tau))
    return GeometryCache(
        h=h,
        lam=float(lam),
        fx_norm=g,
        tau=tau,
        kappa=kappa,
        nabla_k=nabla,
        phi=sca[K.PHI].copy(),
        V=vec[K.VEL].T.copy(),
        w=kappa * g[:, None],
    )


def _vnorm(v):
    return np.sqrt(np.einsum("ij,ij->i", v, v))


def qlemma_residual(curve):
    """max_i |ds(kappa) - (nabla_s kappa - |kappa|^2 tau)|."""
    c = geometry(curve, 1.0, m_max=2)
    lhs = c.ds(c.kappa)
    rhs = c.nabla_k[0] - c.kappa_sq[:, None] * c.tau
    return float(_vnorm(lhs - rhs).max())


def fxx_decomposition_residual(curve, lam):
    """max_i |f_xx - (|f_x|^2 kappa + (phi/lam) |f_x| tau)| with f_xx = dx(dx(f))."""
    c = geometry(curve, lam, m_max=2)
    g = c.fx_norm[:, None]
    fxx = dx(dx(curve.nodes, curve.h), curve.h)
    rhs = g * g * c.kappa + (c.phi[:, None] / lam) * g * c.tau
    return float(_vnorm(fxx - rhs).max())
