"""Pre-Birkhoff coordinates: z_n+-, (x_n, y_n), and the Fourier comparison.

The Workspace bundles every pipeline product (catalog, contours, roots,
differentials, actions, angles) for one potential.  For finite-difference
stencils it can rebuild itself near a reference workspace, keeping index
assignments and branch notes coherent across the stencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import angles as ang
from . import differentials as dif
from .actions import action, action_ratio, compute_actions
from .errors import ClosedGap
from .monodromy import DEFAULT_CFG, IntegratorConfig
from .potential import FOCUSING
from .roots_contours import RootEvaluator, build_cut_contour_system
from .spectrum import build_catalog, refine_catalog

COLLAPSE_TOL = 1e-8


def pipeline_cfg(p, steps=512):
    """Richardson pays off whenever the potential is non-constant."""
    return IntegratorConfig(steps=steps, richardson=p.max_mode > 0)


class Workspace:
    """All pipeline products for one potential, built lazily per index."""

    def __init__(self, p, cat, sys, roots, cfg):
        self.p = p
        self.cat = cat
        self.sys = sys
        self.roots = roots
        self.cfg = cfg
        self._diffs = {}
        self._actions = {}
        self._ratio = {}
        self._theta = {}
        self._phase = {}   # theta_n - beta^n_n, assembled directly
        self._zpair = {}

    @classmethod
    def build(cls, p, n_max, cfg=None):
        cfg = cfg or pipeline_cfg(p)
        cat = build_catalog(p, n_max, cfg)
        sys = build_cut_contour_system(cat)
        roots = RootEvaluator(p, cat, sys, cfg)
        return cls(p, cat, sys, roots, cfg)

    @classmethod
    def build_near(cls, p, ref, cfg=None):
        """Workspace for a nearby potential, seeded from a reference one."""
        cfg = cfg or ref.cfg
        cat = refine_catalog(p, ref.cat, cfg)
        sys = build_cut_contour_system(cat)
        roots = RootEvaluator(p, cat, sys, cfg)
        return cls(p, cat, sys, roots, cfg)

    # -- cached per-index products --------------------------------------

    def differential(self, n):
        if n not in self._diffs:
            self._diffs[n] = dif.solve_normalized_differential(
                self.p, self.cat, self.sys, self.roots, n, self.cfg
            )
        return self._diffs[n]

    def action(self, n):
        if n not in self._actions:
            I_n, _, _ = action(self.p, self.cat, self.sys, self.roots, n, self.cfg)
            self._actions[n] = I_n
        return self._actions[n]

    def action_ratio(self, n):
        if n not in self._ratio:
            self._ratio[n] = action_ratio(
                self.p, self.cat, self.sys, self.roots, n, self.cfg,
                I_n=self.action(n),
            )
        return self._ratio[n]

    def xi(self, n):
        return np.sqrt(self.action_ratio(n))

    def theta(self, n):
        """theta_n, with the diagonal term recovered from z_n+ for |n| > R.

        beta^n_n = -i log(z_n+ / gamma_n) shares the conditioning of the
        closed-form z pair, which stays smooth when mu_n runs into a band
        edge; the direct quadrature (angles.theta) agrees but carries the
        square-root sensitivity of the path endpoint there.
        """
        if n not in self._theta:
            if abs(n) > self.cat.R:
                gam = self.cat.gamma(n)
                if abs(gam) <= 1e-9:
                    from .errors import ClosedGap

                    raise ClosedGap(f"theta_{n} undefined: gap collapsed")
                zp, _ = self.z_pair(n)
                beta = -1j * np.log(zp / gam)
                val = self.phase(n) + beta
                val = complex(np.mod(val.real, 2 * np.pi), val.imag)
                self._theta[n] = val
            else:
                self._theta[n] = ang.theta(
                    self.p, self.cat, self.sys, self.roots, self.differential(n),
                    n, self.cfg,
                )
        return self._theta[n]

    def phase(self, n):
        """theta_n - beta^n_n, formed directly (analytic through collapse)."""
        if n not in self._phase:
            self._phase[n] = ang.phase_angle(
                self.p, self.cat, self.sys, self.roots, self.differential(n), n,
                self.cfg,
            )
        return self._phase[n]

    def z_pair(self, n):
        if n not in self._zpair:
            self._zpair[n] = z_pair(
                self.p, self.cat, self.sys, self.roots, self.differential(n), n,
                self.cfg,
            )
        return self._zpair[n]


def _Z_n(roots, d_n, lam):
    """Z_n(lambda) = -prod_{m != n} (sigma^n_m - lambda)/w_m(lambda)."""
    return 1j * roots.w_product_ratio(d_n.sigma, d_n.n,
                                      np.asarray(lam, dtype=complex), skip=(d_n.n,))


def chi_exponent(cat, roots, d_n, n, nodes=200):
    """int_{tau_n}^{mu_n} (Z_n(tau_n) - Z_n(lambda)) / (tau_n - lambda) dlambda."""
    tau, mu = cat.tau(n), cat.mu[n]
    if abs(mu - tau) < 1e-13:
        return 0.0 + 0.0j
    s, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (s + 1.0)
    wt = 0.5 * w
    lam = tau + t * (mu - tau)
    z_tau = _Z_n(roots, d_n, [tau])[0]
    vals = (z_tau - _Z_n(roots, d_n, lam)) / (tau - lam)
    return np.sum(vals * wt) * (mu - tau)


def _regular_part_integral(cat, sys, roots, d_n, n, nodes=512):
    """int_{lam_n-}^{mu_n} (Z_n(lambda) + 1)/w_n(lambda) dlambda.

    This is the regular exponent o_n + v_n of the closed form for z_n+-; the
    numerator is O(gamma), the edge singularity of 1/w_n is absorbed by the
    node clustering and exact differencing against the path start."""
    from .angles import _edge_root_factory, _nudge_off_cuts

    mu = roots.mu_side_point(n)
    start = cat.lam_minus[n]
    dd = mu - start
    if abs(dd) < 1e-13:
        return 0.0 + 0.0j
    wn = _edge_root_factory(sys, n, start, dd, mu)

    s, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    t = 0.5 * (1.0 - np.cos(np.pi * s))
    dt = 0.5 * np.pi * np.sin(np.pi * s) * w
    lam = _nudge_off_cuts(sys, start + t * dd, side_ref=mu)
    z_vals = 1j * roots.w_product_ratio(d_n.sigma, n, lam, skip=(n,))
    return np.sum((z_vals + 1.0) / wn(t) * dt) * dd


def z_pair(p, cat, sys, roots, d_n, n, cfg=DEFAULT_CFG):
    """z_n+- = gamma_n e^{+-i beta^n_n}, with the collapsed-gap limit values.

    Evaluated through the exact factorization

        z_n+- = [2(tau_n - mu_n) +- 2 delta(mu_n)/G(mu_n)] e^{+- eps_n (o+v)}

    where G = sqrt_c / w_n is the regular cofactor of the canonical root and
    delta the anti-discriminant: the combination delta/G replaces the ill-
    conditioned epsilon_n w_n(mu_n) next to a band edge, and the product
    z_n+ z_n- = gamma_n^2 holds identically.
    """
    if abs(n) <= cat.R:
        raise ValueError("z_pair is defined for |n| > R")
    gam = cat.gamma(n)
    tau, mu = cat.tau(n), cat.mu[n]
    if abs(gam) < COLLAPSE_TOL:
        a, b = sys.cuts[n]
        # below the geometry floor, mu coincides with the collapsed double point
        if abs(mu - tau) <= max(abs(b - a), 1e-8):
            return 0.0 + 0.0j, 0.0 + 0.0j
        eps = roots.star_sign(n)
        e = np.exp(chi_exponent(cat, roots, d_n, n))
        return 2 * (tau - mu) * (1 + eps) * e, 2 * (tau - mu) * (1 - eps) * e

    from .monodromy import scalars_batch
    from .roots_contours import standard_root

    mu_eval = roots.mu_side_point(n)
    _, _, anti, chi, _ = (x[0] for x in scalars_batch(p, np.array([mu]), cfg))
    a, b = sys.cuts[n]
    edge_dist = min(abs(mu - a), abs(mu - b))
    if edge_dist > 1e-8:
        # the exact cofactor sqrt_c / w_n: its absolute error stays below
        # ~ sigma_e sqrt(gamma/dist) even close to the edge
        G = roots.sqrt_chi_p(np.array([mu_eval]))[0] \
            / standard_root(sys, n, mu_eval)
    else:
        # at (numerically) coincident edges the product guide regularizes
        G = roots.guide(np.array([mu_eval]), skip=n)[0]
    half = 2.0 * (tau - mu)
    corr = 2.0 * anti / G
    eps = roots.star_sign(n, on_cut="displace")
    reg = eps * _regular_part_integral(cat, sys, roots, d_n, n)
    return (half + corr) * np.exp(reg), (half - corr) * np.exp(-reg)


def z_n_check(p, cat, sys, roots, d_n, n, samples=17):
    """Samples Z_n along the cut G_n; reports max |Z_n + 1| and its gamma ratio."""
    a, b = sys.cuts[n]
    gam = b - a
    if abs(gam) < 1e-12:
        vals = _Z_n(roots, d_n, [0.5 * (a + b)])
    else:
        t = np.linspace(0.02, 0.98, samples)
        u = gam / abs(gam)
        lam = a + t * gam + 1e-9 * (1j * u)   # just off the cut, fixed side
        vals = _Z_n(roots, d_n, lam)
    worst = float(np.max(np.abs(vals + 1.0)))
    return {"max_dev": worst,
            "ratio_to_gamma": worst / max(abs(gam), 1e-300)}


@dataclass
class BirkhoffState:
    n_max: int
    R: int
    entries: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def xy(self, n):
        e = self.entries[n]
        return e["x"], e["y"]

    def uv(self, n):
        e = self.entries[n]
        return e["u"], e["v"]

    def zw_sequence(self):
        """(z_n, w_n) with z_n = (x_n - i y_n)/sqrt(2), w_n = -conj(z_-n)."""
        out = {}
        for n, e in self.entries.items():
            z = (e["x"] - 1j * e["y"]) / np.sqrt(2.0)
            out[n] = z
        return {n: (out[n], -np.conjugate(out[-n])) for n in out}


def birkhoff_coordinates(p, n_max, cfg=None, ws=None):
    """Assemble (x_n, y_n) for |n| <= n_max through the full pipeline."""
    ws = ws or Workspace.build(p, n_max, cfg)
    cat = ws.cat
    state = BirkhoffState(n_max=n_max, R=cat.R)
    for n in cat.indices():
        collapsed = abs(n) > cat.R and abs(cat.gamma(n)) < COLLAPSE_TOL
        if abs(n) > cat.R:
            zp, zm = ws.z_pair(n)
            if collapsed and zp == 0 and zm == 0:
                x = y = 0.0 + 0.0j
                I_n = 0.0 + 0.0j
                th = np.nan
            else:
                xi_n = ws.xi(n)
                ph = ws.phase(n)   # theta - beta^n_n survives gap collapse
                x = xi_n / (2 * np.sqrt(2)) * (zp * np.exp(1j * ph) + zm * np.exp(-1j * ph))
                y = xi_n / (2 * np.sqrt(2) * 1j) * (zp * np.exp(1j * ph) - zm * np.exp(-1j * ph))
                I_n = ws.action(n)
                th = ws.theta(n) if not collapsed else np.nan
        else:
            I_n = ws.action(n)
            th = ws.theta(n)
            zp = zm = np.nan
            if I_n.real >= 0:
                state.flags.append(("NonNegativeLowAction", n, I_n))
                root = np.sqrt(2 * I_n)
            else:
                root = 1j * np.sqrt(-2 * I_n.real + 0j)
            x = root * np.cos(th)
            y = root * np.sin(th)
        u, v = -1j * x, -1j * y
        state.entries[n] = {
            "x": x, "y": y, "u": u, "v": v, "I": I_n, "theta": th,
            "z_plus": zp, "z_minus": zm, "collapsed": collapsed,
        }
    return state


def fourier_defect(p, state):
    """d_n = |(z_n, w_n) - (-phi1_hat(n), -phi2_hat(n))| under the identification.

    The hat is int_0^1 phi e^{+2 pi i n x} dx, i.e. the stored coefficient at -n;
    with that convention the Birkhoff map linearizes to the map F at phi = 0.
    """
    zw = state.zw_sequence()
    out = {}
    for n, (z, w) in zw.items():
        c1 = p.coeff(-n)[0]
        c2 = p.coeff(-n)[1]
        d = float(np.hypot(abs(z + c1), abs(w + c2)))
        out[n] = d
    return out
