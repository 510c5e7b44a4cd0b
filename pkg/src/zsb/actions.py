"""Action variables by contour quadrature and the normalized ratio xi_n."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureStall, RatioNotPositive
from .monodromy import DEFAULT_CFG, scalars_batch
from .roots_contours import standard_root

CLOSED_GAP_TOL = 1e-8
RATIO_SWITCH_TOL = 1e-6
QUAD_TOL = 1e-9
MAX_QUAD_NODES = 2 ** 14


@dataclass
class ActionSet:
    entries: dict = field(default_factory=dict)  # n -> dict(I, ratio, xi, err, nodes)

    def I(self, n):
        return self.entries[n]["I"]

    def ratio(self, n):
        return self.entries[n]["ratio"]

    def xi(self, n):
        return self.entries[n]["xi"]

    def indices(self):
        return sorted(self.entries)


def _contour_integral(contour, f, tol=QUAD_TOL, start=64, cap=MAX_QUAD_NODES):
    """Closed-contour quadrature with geometric node doubling."""
    m = start
    prev = None
    while m <= cap:
        z, dz = contour.points(m)
        val = np.sum(f(z) * dz)
        if prev is not None and abs(val - prev) < tol:
            return val, abs(val - prev), m
        prev = val
        m *= 2
    raise QuadratureStall(f"contour quadrature did not settle below {tol} by {cap} nodes")


def action(p, cat, sys, roots, n, cfg=DEFAULT_CFG, tol=QUAD_TOL):
    """I_n = (1/pi) oint_{Gamma_n} lambda Delta-dot / sqrt_c(Delta^2-4) dlambda."""
    if abs(n) > cat.R and abs(cat.gamma(n)) < CLOSED_GAP_TOL:
        return 0.0 + 0.0j, 0.0, 0  # Cauchy: integrand analytic inside Gamma_n

    def integrand(z):
        _, ddot, _, chi, _ = scalars_batch(p, z, cfg)
        return z * ddot / roots.sqrt_chi_p(z, chi=chi)

    val, err, m = _contour_integral(sys.contours[n], integrand, tol)
    return val / np.pi, err / np.pi, m


def _chi_product_at(cat, sys, n, lam):
    """prod_{k != n} (lamdot_k - lambda) / w_k(lambda), truncated at the catalog.

    Collapsed-gap factors are exactly one (the critical point coincides with the
    double eigenvalue) and are skipped.
    """
    out = 1.0 + 0.0j
    for k in cat.indices():
        if k == n:
            continue
        if abs(cat.gamma(k)) < CLOSED_GAP_TOL and abs(k) > cat.R:
            continue
        out *= (cat.lamdot[k] - lam) / standard_root(sys, k, lam)
    return out


def action_ratio(p, cat, sys, roots, n, cfg=DEFAULT_CFG, I_n=None):
    """4 I_n / gamma_n^2, with the collapsed-gap analytic limit."""
    if abs(n) <= cat.R:
        raise ValueError("action ratio is defined for |n| > R")
    gam = cat.gamma(n)
    if abs(gam) >= RATIO_SWITCH_TOL:
        if I_n is None:
            I_n, _, _ = action(p, cat, sys, roots, n, cfg)
        return 4.0 * I_n / (gam * gam)
    return _chi_product_at(cat, sys, n, cat.tau(n))


def xi(aset, n):
    """Principal square root of ratio_n; positive on focusing inputs."""
    r = aset.ratio(n)
    if r.real <= 0:
        raise RatioNotPositive(
            f"Re(4 I_{n}/gamma_{n}^2) = {r.real:.3e} <= 0; outside the validity region"
        )
    return np.sqrt(r)


def compute_actions(p, cat, sys, roots, ns=None, cfg=DEFAULT_CFG, pmap=map):
    """ActionSet over the requested indices (default: the whole catalog)."""
    ns = list(cat.indices()) if ns is None else list(ns)

    def one(n):
        I_n, err, m = action(p, cat, sys, roots, n, cfg)
        if abs(n) > cat.R:
            ratio = action_ratio(p, cat, sys, roots, n, cfg, I_n=I_n)
        else:
            ratio = np.nan + 0j
        return n, {"I": I_n, "ratio": ratio, "err": err, "nodes": m}

    aset = ActionSet()
    for n, entry in pmap(one, ns):
        if abs(n) > cat.R:
            entry["xi"] = np.sqrt(entry["ratio"]) if entry["ratio"].real > 0 else np.nan
        else:
            entry["xi"] = np.nan
        aset.entries[n] = entry
    return aset
