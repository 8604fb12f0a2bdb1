"""Length, Dirichlet and bending energies by periodic rectangle quadrature."""
import math
from dataclasses import dataclass

import numpy as np

from curveflow.grid import dx

TWO_PI = 2.0 * math.pi


def tol_bound(h):
    """Slack tolerance for the continuum inequalities at grid spacing ``h``."""
    return 1e-8 + 10.0 * h * h


@dataclass(frozen=True)
class EnergyBreakdown:
    length: float
    dirichlet: float
    bending: float
    lam: float

    @property
    def e_lambda(self):
        return self.bending + self.lam * self.length

    @property
    def d_lambda(self):
        return self.bending + self.lam * self.dirichlet


def energies(cache, lam=None):
    """L = h sum g, D = h/2 sum g^2, E = h/2 sum |kappa|^2 g."""
    lam = cache.lam if lam is None else float(lam)
    g = cache.fx_norm
    h = cache.h
    return EnergyBreakdown(
        length=float(h * g.sum()),
        dirichlet=float(0.5 * h * np.sum(g * g)),
        bending=float(0.5 * h * np.sum(cache.kappa_sq * g)),
        lam=lam,
    )


def kappa_l2(cache):
    return cache.l2(cache.kappa)


def poincare_slack(cache):
    """sqrt(L) * ||kappa||_L2 - 2 pi; zero on round circles."""
    L = cache.h * cache.fx_norm.sum()
    return math.sqrt(L) * kappa_l2(cache) - TWO_PI


def length_domination_slack(breakdown):
    """sqrt(2 pi) sqrt(2 D) - L; zero iff |f_x| is constant."""
    return math.sqrt(TWO_PI) * math.sqrt(2.0 * breakdown.dirichlet) - breakdown.length


def sup_fx_embedding_slack(cache):
    """int |(|f_x|)_x| dx + (1/2pi) int |f_x| dx - max |f_x|."""
    g = cache.fx_norm
    h = cache.h
    rhs = h * np.abs(dx(g, h)).sum() + h * g.sum() / TWO_PI
    return float(rhs - g.max())
