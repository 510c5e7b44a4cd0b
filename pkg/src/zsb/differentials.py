"""Normalized differentials zeta_n: Newton solve of the a-period conditions.

zeta_n is the entire function -(2/pi_n) prod_{k != n} (sigma^n_k - lambda)/pi_k
whose a-periods against the canonical root are 2 pi delta_nm.  For finitely
supported potentials all but finitely many gaps are numerically closed, where
sigma^n_k = tau_k exactly; the remaining sigma's form a finite Newton system
with an analytic Jacobian (one extra contour quadrature per pair).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from .errors import NewtonDivergence, NoLowModes, OverdeterminedMismatch
from .monodromy import DEFAULT_CFG
from .roots_contours import standard_root

ACTIVE_GAP_TOL = 1e-8
NEWTON_RESIDUAL_TOL = 1e-9
AUDIT_TOL = 1e-6


@dataclass
class NormalizedDifferential:
    n: int
    sigma: dict                 # k -> sigma^n_k over the active indices
    residual: float
    K_active: list
    nodes: int = 256


def active_indices(cat, n):
    ks = [k for k in cat.indices()
          if k != n and (abs(k) <= cat.R or abs(cat.gamma(k)) > ACTIVE_GAP_TOL)]
    return ks


def _a_periods(roots, sigma_map, n, contours_by_m, nodes):
    """(1/2pi) oint_{Gamma_m} zeta_n / sqrt_c dlambda for the listed m."""
    out = {}
    for m, contour in contours_by_m.items():
        z, dz = contour.points(nodes)
        vals = roots.w_product_ratio(sigma_map, n, z)
        out[m] = np.sum(vals * dz) / (2 * np.pi)
    return out


def _jacobian(roots, sigma_map, n, ks, contours_by_m, nodes):
    """d a_m / d sigma_k = (1/2pi) oint zeta_n / (sqrt_c (sigma_k - lambda))."""
    ms = sorted(contours_by_m)
    J = np.zeros((len(ms), len(ks)), dtype=complex)
    for i, m in enumerate(ms):
        z, dz = contours_by_m[m].points(nodes)
        base = roots.w_product_ratio(sigma_map, n, z)
        for j, k in enumerate(ks):
            J[i, j] = np.sum(base / (sigma_map[k] - z) * dz) / (2 * np.pi)
    return J, ms


def solve_normalized_differential(p, cat, sys, roots, n, cfg=DEFAULT_CFG,
                                  nodes=256, tol=NEWTON_RESIDUAL_TOL,
                                  _enlarged=False, extra_active=()):
    """Newton iteration on the sigma's from the initial guess sigma = tau."""
    ks = active_indices(cat, n)
    for k in extra_active:
        if k not in ks and k != n:
            ks.append(k)
    ks = sorted(ks)
    sigma = {k: cat.tau(k) for k in ks}
    eq_ms = sorted(set(ks) | {n})
    contours = {m: sys.contours[m] for m in eq_ms}

    if ks:
        last = np.inf
        for it in range(30):
            a = _a_periods(roots, sigma, n, contours, nodes)
            res = np.array([a[m] - (1.0 if m == n else 0.0) for m in eq_ms])
            worst = float(np.max(np.abs(res)))
            if worst < tol:
                break
            if worst > 10 * last + 1.0:
                raise NewtonDivergence(
                    f"differential Newton diverged for n={n}; residual {worst:.2e}"
                )
            last = worst
            J, ms = _jacobian(roots, sigma, n, ks, contours, nodes)
            step, *_ = np.linalg.lstsq(J, -res, rcond=None)
            step = step * min(1.0, 0.3 / max(np.max(np.abs(step)), 1e-30))
            for j, k in enumerate(ks):
                sigma[k] = sigma[k] + step[j]
        else:
            raise NewtonDivergence(
                f"differential Newton did not converge for n={n}; residual {worst:.2e}"
            )

    # final residual at doubled node count
    a = _a_periods(roots, sigma, n, contours, 2 * nodes)
    res = max(abs(a[m] - (1.0 if m == n else 0.0)) for m in eq_ms)
    if res > 50 * tol:
        raise NewtonDivergence(f"differential residual {res:.2e} for n={n}")

    d = NormalizedDifferential(n=n, sigma=sigma, residual=float(res),
                               K_active=ks, nodes=nodes)

    # audit the nearest non-active contours; enlarge the active set once if bad
    audit = [m for m in cat.indices() if m not in eq_ms]
    audit.sort(key=lambda m: abs(m - n))
    audit = audit[:8]
    bad = []
    for m in audit:
        z, dz = sys.contours[m].points(nodes)
        val = np.sum(roots.w_product_ratio(sigma, n, z) * dz) / (2 * np.pi)
        if abs(val) > AUDIT_TOL:
            bad.append(m)
    if bad:
        if _enlarged:
            raise OverdeterminedMismatch(
                f"non-active a-period defect persists for n={n} at {bad}"
            )
        return solve_normalized_differential(
            p, cat, sys, roots, n, cfg, nodes, tol,
            _enlarged=True, extra_active=tuple(bad),
        )
    return d


def evaluate_zeta(d, roots, lam):
    """zeta_n(lambda) from the product form with the closed tail resummed.

    Active factors use the solved sigma's, measured midpoints stand in for the
    other catalog indices, and the remainder collapses to a Gamma-function tail
    (exact for constant-mean tails, so no spurious poles appear).
    """
    sys = roots.sys
    n = d.n
    lam = np.asarray(lam, dtype=complex)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    K = sys.K_tail

    pi_n = n * np.pi if n != 0 else 1.0
    out = np.full_like(lam, -2.0 / pi_n)
    for k in range(-K, K + 1):
        if k == n:
            continue
        if k in d.sigma:
            sig = d.sigma[k]
        elif k in sys.cuts:
            sig = sys.tau(k)
        else:
            sig = np.sign(k) * np.sqrt((k * np.pi) ** 2 + roots.Q)
        pi_k = k * np.pi if k != 0 else 1.0
        out = out * (sig - lam) / pi_k

    S2 = lam * lam + roots.Q
    zp = np.sqrt(S2) / np.pi
    with np.errstate(invalid="ignore"):
        tail = np.exp(2 * loggamma(K + 1) - loggamma(K + 1 - zp) - loggamma(K + 1 + zp))
    if n == 0:
        # the k=0 factor above used pi_0 = 1; nothing else to fix
        pass
    out = out * tail
    return out[0] if scalar else out


def b_period(p, cat, sys, roots, d, k, nodes=256, tol=1e-9):
    """b_k-period of zeta_n/sqrt(chi_p): 2x the integral over the real segment
    between the real-axis crossings of consecutive low cuts."""
    if cat.R == 0:
        raise NoLowModes("R = 0: no b-cycles exist")
    if k == 0 or abs(k) > cat.R:
        raise NoLowModes(f"b-cycle index k={k} outside 1 <= |k| <= R={cat.R}")

    def crossing(j):
        a, b = sys.cuts[j]
        # conjugation-symmetric cuts cross the real axis at their midpoint
        return (0.5 * (a + b)).real

    if k >= 1:
        x0, x1 = crossing(k - 1), crossing(k)
    else:
        x0, x1 = crossing(k), crossing(k + 1)

    m = nodes
    prev = None
    while m <= 2 ** 13:
        # cluster nodes toward the endpoints: the integrand grows like
        # 1/|w| there when the adjacent gaps are narrow
        s, w = np.polynomial.legendre.leggauss(m)
        t = 0.5 * (1.0 - np.cos(np.pi * 0.5 * (s + 1.0)))
        dt = 0.25 * np.pi * np.sin(np.pi * 0.5 * (s + 1.0)) * w
        z = x0 + (x1 - x0) * t
        vals = roots.w_product_ratio(d.sigma, d.n, z.astype(complex))
        val = 2.0 * np.sum(vals * dt) * (x1 - x0)
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
        m *= 2
    return prev
