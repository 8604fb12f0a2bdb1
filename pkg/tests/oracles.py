"""Independent reference computations for the tests.

Spectral (FFT) differentiation of smooth periodic samples is exact for
trigonometric polynomials and spectrally accurate otherwise, so it serves as
a continuum oracle that shares no stencil with the package.
"""
import numpy as np


def spec_dx(u):
    u = np.asarray(u, dtype=float)
    N = u.shape[0]
    k = np.fft.fftfreq(N, d=1.0 / N)
    k[N // 2] = 0.0
    mult = 1j * k
    if u.ndim == 2:
        mult = mult[:, None]
    return np.real(np.fft.ifft(mult * np.fft.fft(u, axis=0), axis=0))


def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def spectral_geometry(nodes, lam):
    """Continuum |f_x|, tau, kappa, nabla_s kappa, nabla_s^2 kappa, phi and V."""
    fx = spec_dx(nodes)
    g = np.linalg.norm(fx, axis=1)
    tau = fx / g[:, None]

    def ds(u):
        d = spec_dx(u)
        return d / g if d.ndim == 1 else d / g[:, None]

    def proj(v):
        return v - _dot(v, tau)[:, None] * tau

    kappa = ds(tau)
    nk1 = proj(ds(kappa))
    nk2 = proj(ds(nk1))
    nk3 = proj(ds(nk2))
    phi = lam * ds(g)
    k2 = _dot(kappa, kappa)
    V = -nk2 - 0.5 * k2[:, None] * kappa + lam * g[:, None] * kappa
    return dict(g=g, tau=tau, kappa=kappa, nk=[nk1, nk2, nk3], phi=phi, V=V)


def vmax(v):
    v = np.asarray(v)
    return float(np.abs(v).max()) if v.ndim == 1 else float(np.linalg.norm(v, axis=1).max())


def ellipse_nodes(N, a=2.0, b=1.0):
    x = 2 * np.pi * np.arange(N) / N
    return np.stack([a * np.cos(x), b * np.sin(x)], axis=1)


def rotation(n, seed=0):
    q, r = np.linalg.qr(np.random.default_rng(seed).normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def fit_circle(points):
    """Least-squares circle through planar points (algebraic fit): centre and radius."""
    x, y = points[:, 0], points[:, 1]
    A = np.stack([2 * x, 2 * y, np.ones_like(x)], axis=1)
    (cx, cy, c), *_ = np.linalg.lstsq(A, x * x + y * y, rcond=None)
    return np.array([cx, cy]), float(np.sqrt(c + cx * cx + cy * cy))


def distance_to_circle(points, radius):
    """Max node distance from the circle of given radius about the best-fit centre."""
    centre, _ = fit_circle(points)
    return float(np.abs(np.linalg.norm(points - centre, axis=1) - radius).max())
