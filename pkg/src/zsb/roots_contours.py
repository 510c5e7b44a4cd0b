"""Cuts, contours and the three square-root branches.

The cut G_n is the straight segment joining lam_n- to lam_n+; around it sit a
closed contour Gamma_n (circle |lambda - n pi| = pi/4 beyond the threshold R,
a conjugation-symmetric stadium for the low pairs) and an inner contour
Gamma'_n.  On this geometry live

  * the standard root w_k ~ -lambda, holomorphic off G_k,
  * the canonical root, a branch of sqrt(Delta^2 - 4) normalized so that it
    equals -2i sin(lambda) at the zero potential,
  * the star root, the branch of sqrt(Delta^2 - 4) pinned at a Dirichlet
    eigenvalue by the anti-discriminant.

The canonical root is evaluated as sign * sqrt(chi_p(lambda)) with chi_p from
the monodromy (so its square is exact); the sign comes from a truncated
product guide whose tail is resummed in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from .errors import ContourCollision, MuOnCut, NearPole, OnCut
from .monodromy import DEFAULT_CFG, monodromy_batch, scalars_batch
from .potential import phi_product_mean

STADIUM_WIDTH = 0.3
MIN_CONTOUR_GAP = np.pi / 20


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def points(self, m):
        t = np.exp(2j * np.pi * np.arange(m) / m)
        z = self.center + self.radius * t
        dz = (2j * np.pi / m) * self.radius * t
        return z, dz

    def samples(self, m=128):
        return self.points(m)[0]


@dataclass(frozen=True)
class Stadium:
    """Counterclockwise boundary of {dist(z, [a, b]) <= width}."""

    a: complex
    b: complex
    width: float

    def _frame(self):
        d = self.b - self.a
        u = d / abs(d) if abs(d) > 1e-12 else 1j
        return u, 1j * u

    def points(self, m):
        mq = max(m // 4, 8)
        u, nu = self._frame()
        w = self.width
        xs, ws = np.polynomial.legendre.leggauss(mq)
        xs = 0.5 * (xs + 1.0)
        ws = 0.5 * ws
        z, dz = [], []
        # straight side on the -nu flank, a -> b
        z.append(self.a - nu * w + xs * (self.b - self.a))
        dz.append(np.full(mq, self.b - self.a) * ws)
        # cap around b, angle -pi/2 -> pi/2 relative to u
        phi = -np.pi / 2 + xs * np.pi
        z.append(self.b + w * np.exp(1j * phi) * u)
        dz.append(1j * w * np.exp(1j * phi) * u * np.pi * ws)
        # straight side on the +nu flank, b -> a
        z.append(self.b + nu * w + xs * (self.a - self.b))
        dz.append(np.full(mq, self.a - self.b) * ws)
        # cap around a
        phi = np.pi / 2 + xs * np.pi
        z.append(self.a + w * np.exp(1j * phi) * u)
        dz.append(1j * w * np.exp(1j * phi) * u * np.pi * ws)
        return np.concatenate(z), np.concatenate(dz)

    def samples(self, m=128):
        return self.points(m)[0]


def contour_quadrature(contour, f, m):
    """oint f(z) dz on m nodes; f maps an array of points to values."""
    z, dz = contour.points(m)
    return np.sum(f(z) * dz)


def _segment_distance(z, a, b):
    """Distance from points z to the segment [a, b]."""
    d = b - a
    L2 = abs(d) ** 2
    if L2 < 1e-24:
        return np.abs(z - a)
    t = np.clip(((z - a) * np.conjugate(d)).real / L2, 0.0, 1.0)
    return np.abs(z - (a + t * d))


@dataclass
class CutContourSystem:
    R: int
    n_max: int
    cuts: dict                      # n -> (lam_minus, lam_plus)
    contours: dict                  # n -> Circle | Stadium
    inner_contours: dict
    K_tail: int
    real_type: str = "generic"

    def tau(self, n):
        a, b = self.cuts[n]
        return 0.5 * (a + b)

    def gamma(self, n):
        a, b = self.cuts[n]
        return b - a


def build_cut_contour_system(cat, width=STADIUM_WIDTH, k_tail=None):
    """Fixed static cuts [lam-, lam+] and their contours; fails on collision."""
    cuts, contours, inner = {}, {}, {}
    for n in cat.indices():
        cuts[n] = (cat.lam_minus[n], cat.lam_plus[n])
        if abs(n) > cat.R:
            contours[n] = Circle(n * np.pi, np.pi / 4)
            inner[n] = Circle(n * np.pi, np.pi / 6)
        else:
            contours[n] = Stadium(cat.lam_minus[n], cat.lam_plus[n], width)
            inner[n] = Stadium(cat.lam_minus[n], cat.lam_plus[n], width / 2)

    sys = CutContourSystem(
        R=cat.R,
        n_max=cat.n_max,
        cuts=cuts,
        contours=contours,
        inner_contours=inner,
        K_tail=k_tail if k_tail is not None else max(cat.R + 8, cat.n_max),
        real_type=cat.real_type,
    )
    _validate_geometry(sys)
    return sys


def _validate_geometry(sys):
    pts = {n: c.samples(96) for n, c in sys.contours.items()}
    ns = sorted(sys.contours)
    for i, n in enumerate(ns):
        for m in ns[i + 1:]:
            cn, cm = sys.contours[n], sys.contours[m]
            centers_apart = abs(np.mean(pts[n]) - np.mean(pts[m]))
            if centers_apart > 8.0:
                continue
            d = np.min(np.abs(pts[n][:, None] - pts[m][None, :]))
            if d < MIN_CONTOUR_GAP:
                raise ContourCollision(
                    f"contours {n} and {m} come within {d:.3f} < pi/20", pair=(n, m)
                )
    # every contour must keep all foreign cuts strictly outside
    for n in ns:
        for m in ns:
            if m == n:
                continue
            a, b = sys.cuts[m]
            if abs(np.mean(pts[n]) - 0.5 * (a + b)) > 8.0:
                continue
            d = float(np.min(_segment_distance(pts[n], a, b)))
            if d < MIN_CONTOUR_GAP / 2:
                raise ContourCollision(
                    f"contour {n} passes within {d:.3f} of cut {m}", pair=(n, m)
                )


# ----------------------------------------------------------------------
# standard root


def standard_root(sys, k, lam):
    """w_k(lambda) = sqrt((lam_k+ - lambda)(lam_k- - lambda)), branch ~ -lambda."""
    a, b = sys.cuts[k]
    tau = 0.5 * (a + b)
    gam = b - a
    lam = np.asarray(lam, dtype=complex)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)

    on_cut = _segment_distance(lam, a, b) < 1e-12
    if np.any(on_cut):
        raise OnCut(f"standard root of gap {k} evaluated on its cut")

    out = np.empty_like(lam)
    far = np.abs(tau - lam) > abs(gam)
    z = tau - lam[far]
    ratio = (gam / 2.0) ** 2 / (z * z)
    out[far] = z * np.sqrt(1.0 - ratio)

    near = ~far
    if np.any(near):
        out[near] = _tracked_root(lam[near], a, b, tau, gam)
    return out[0] if scalar else out


def _tracked_root(lams, a, b, tau, gam, steps=28):
    """Continuation of w_k along radial rays from the asymptotic region."""
    d = lams - tau
    r = np.abs(d)
    tiny = r < 1e-15
    r_safe = np.where(tiny, 1.0, r)
    rr = max(2.0 * abs(gam), 1.0)
    # per-point geometric ladder from the far region (t = rr/r) down to t = 1
    expo = np.linspace(1.0, 0.0, steps)[:, None]
    t = (rr / r_safe)[None, :] ** expo
    z = tau + t * d[None, :]
    vals = np.sqrt((b - z) * (a - z))
    zf = z[0]
    ref = (tau - zf) * np.sqrt(1.0 - (gam / 2.0) ** 2 / (tau - zf) ** 2)
    flip = np.abs(vals[0] - ref) > np.abs(vals[0] + ref)
    cur = np.where(flip, -vals[0], vals[0])
    for i in range(1, steps):
        v = vals[i]
        flip = np.abs(v - cur) > np.abs(v + cur)
        cur = np.where(flip, -v, v)
    return np.where(tiny, 0.0, cur)


# ----------------------------------------------------------------------
# canonical root and friends


class RootEvaluator:
    """Branch bookkeeping for the canonical and star roots of sqrt(chi_p)."""

    def __init__(self, p, cat, sys, cfg=DEFAULT_CFG):
        self.p = p
        self.cat = cat
        self.sys = sys
        self.cfg = cfg
        # mean of phi_1 phi_2 drives the tail model tau_k ~ sqrt(k^2 pi^2 + q)
        self.Q = -complex(phi_product_mean(p))
        self._eps_cache = {}

    # -- truncated product guide ---------------------------------------

    def _tail_factor(self, lam):
        """prod_{m>K} (1 - S^2/(m pi)^2) with S^2 = lambda^2 + Q, via loggamma."""
        K = self.sys.K_tail
        S2 = lam * lam + self.Q
        zp = np.sqrt(S2) / np.pi
        return np.exp(2 * loggamma(K + 1) - loggamma(K + 1 - zp) - loggamma(K + 1 + zp))

    def guide(self, lam, skip=None):
        """Truncated-product approximation of the canonical root.

        With `skip=n` the factor w_n(lambda)/pi_n is left out, which gives the
        regular cofactor G = sqrt_c / w_n -- the well-conditioned object next
        to the cut G_n."""
        lam = np.asarray(lam, dtype=complex)
        K = self.sys.K_tail
        prod = np.ones_like(lam)
        for k in range(-K, K + 1):
            if k == skip:
                pass
            elif k in self.sys.cuts:
                prod = prod * standard_root(self.sys, k, lam)
            else:
                tau_k = np.sign(k) * np.sqrt((k * np.pi) ** 2 + self.Q)
                prod = prod * (tau_k - lam)
            if k != 0:
                prod = prod / (abs(k) * np.pi)
        sign = (-1) ** K
        # prod = prod w_k / prod_{k != 0} k pi ; the tail restores the rest.
        # With `skip` the 1/pi_n normalization stays in place: the cofactor is
        # exactly sqrt_c / w_n.
        return 2j * sign * prod * self._tail_factor(lam)

    # -- exact-magnitude canonical root ---------------------------------

    def sqrt_chi_p(self, lam, chi=None):
        """Canonical root: branch-guided exact square root of chi_p."""
        lam = np.asarray(lam, dtype=complex)
        scalar = lam.ndim == 0
        lam = np.atleast_1d(lam)
        if chi is None:
            _, _, _, chi, _ = scalars_batch(self.p, lam, self.cfg)
        g = self.guide(lam)
        s = np.sqrt(chi)
        flip = np.abs(s - g) > np.abs(s + g)
        s = np.where(flip, -s, s)
        return s[0] if scalar else s

    def canonical_root(self, lam):
        lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
        for n, (a, b) in self.sys.cuts.items():
            d = _segment_distance(lam_arr, a, b)
            if np.any(d < 1e-12):
                if abs(b - a) < 1e-12:
                    raise NearPole(
                        f"lambda at the collapsed gap {n}; use a limit value"
                    )
                raise OnCut(f"canonical root evaluated on cut {n}")
        return self.sqrt_chi_p(lam)

    # -- ratio form of zeta_n / sqrt(chi_p) ------------------------------

    def w_product_ratio(self, sigma_map, n, lam, skip=()):
        """i / w_n * prod_{k != n} (sigma_k - lambda)/w_k over |k| <= K_tail.

        Closed tail factors are exactly one and are dropped; `sigma_map` gives
        sigma^n_k for the active indices, tau_k is used elsewhere.  Indices in
        `skip` are left out entirely (their singular factor is handled by the
        caller).
        """
        lam = np.asarray(lam, dtype=complex)
        out = np.full_like(lam, 1j)
        if n not in skip:
            out = out / standard_root(self.sys, n, lam)
        for k in self.sys.cuts:
            if k == n or k in skip:
                continue
            sig = sigma_map.get(k)
            if sig is None:
                if abs(self.sys.gamma(k)) < 1e-8:
                    continue  # factor is exactly 1 on a collapsed gap
                sig = self.sys.tau(k)
            out = out * (sig - lam) / standard_root(self.sys, k, lam)
        return out

    # -- star root -------------------------------------------------------

    def star_sign(self, n, on_cut="raise"):
        """epsilon_n = delta(mu_n) / sqrt_c(chi_p(mu_n)), in {-1, 0, +1}.

        With on_cut="displace", a mu in the open cut is evaluated a fixed
        1e-9 off the cut on the canonical (+i u) side -- the analytic limit
        path used by the angle integrals.
        """
        key = (n, on_cut)
        if key in self._eps_cache:
            return self._eps_cache[key]
        mu = self.cat.mu[n]
        a, b = self.sys.cuts[n]
        # mu at a band edge: the divisor sits at a branch point, epsilon = 0
        # (position criterion; the |Delta(mu) -+ 2| < 1e-9 form is equivalent
        # there but ill-conditioned for narrow gaps).  The threshold matches
        # the angle integrals' coincidence tolerance: sqrt-amplification makes
        # even 1e-10 separations carry real angle signal.
        if min(abs(mu - a), abs(mu - b)) < 1e-13:
            eps = 0
        else:
            mu_eval = mu
            if abs(b - a) > 1e-12 and _segment_distance(np.array([mu]), a, b)[0] < 1e-10:
                if on_cut == "raise":
                    raise MuOnCut(f"mu_{n} lies on the cut G_{n}; sign undefined")
                u = (b - a) / abs(b - a)
                off = ((mu - a) / u).imag
                mu_eval = mu + (1e-9 - off) * (1j * u)
            _, _, anti, chi, _ = (x[0] for x in
                                  scalars_batch(self.p, np.array([mu]), self.cfg))
            sq = self.sqrt_chi_p(np.array([mu_eval]))[0]
            ratio = anti / sq
            eps = 1 if ratio.real > 0 else -1
        self._eps_cache[key] = eps
        return eps

    def mu_side_point(self, n):
        """mu_n, displaced to the canonical side when it lies inside the cut."""
        mu = self.cat.mu[n]
        a, b = self.sys.cuts[n]
        if abs(b - a) > 1e-12 and _segment_distance(np.array([mu]), a, b)[0] < 1e-10 \
                and min(abs(mu - a), abs(mu - b)) > 1e-13:
            u = (b - a) / abs(b - a)
            off = ((mu - a) / u).imag
            return mu + (1e-9 - off) * (1j * u)
        return mu


def canonical_root(sys, p, lam, cat=None, cfg=DEFAULT_CFG):
    """Functional form of RootEvaluator.canonical_root."""
    ev = RootEvaluator(p, cat, sys, cfg)
    return ev.canonical_root(lam)


def star_root_sign(p, cat, sys, n, cfg=DEFAULT_CFG):
    """Sign epsilon_n relating the star root at mu_n to the canonical root."""
    if abs(n) <= cat.R:
        raise ValueError("star sign is defined for |n| > R")
    return RootEvaluator(p, cat, sys, cfg).star_sign(n)
