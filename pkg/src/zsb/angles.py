"""Angle variables: Abel-type integrals from lam_k- to the Dirichlet divisor.

Every integral is taken along a straight path with the inverse-square-root
endpoint singularity absorbed by a t = s^2 substitution, and the branch of
sqrt(chi_p) fixed at the Dirichlet endpoint by the anti-discriminant
(star-root rule).  theta_n = beta~^n + sum_{|k|>R} beta^n_k, reduced mod 2pi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClosedGap, PathCrossesCut, QuadratureStall
from .monodromy import DEFAULT_CFG, scalars_batch
from .roots_contours import _segment_distance, standard_root

K_ANGLE_TOL = 1e-10
# below this distance a Dirichlet eigenvalue is treated as sitting exactly on
# a band edge: separations under ~100x the eigenvalue accuracy cannot be
# distinguished from exact coincidence, and the 0/pi limit value is then the
# right answer (the quadrature would amplify the position noise like
# sqrt(distance/gap)).  Coordinates never route through this case: z_n+- use
# the anti-discriminant factorization, which stays well conditioned.
ENDPOINT_COINCIDENCE_TOL = 1e-10
QUAD_TOL = 1e-9


@dataclass(frozen=True)
class DirichletDivisor:
    k: int
    mu: complex
    star_value: complex          # anti-discriminant at mu, selects the sheet
    residual: float              # |star^2 - chi_p(mu)|


@dataclass
class AngleSet:
    entries: dict = field(default_factory=dict)
    # per n: dict(theta, beta_low, beta_terms, beta_diag, im_residual, branch_note)

    def theta(self, n):
        return self.entries[n]["theta"]


def dirichlet_divisor(p, cat, k, cfg=DEFAULT_CFG):
    mu = cat.mu[k]
    d, _, anti, chi, _ = (x[0] for x in scalars_batch(p, np.array([mu]), cfg))
    return DirichletDivisor(k=k, mu=mu, star_value=complex(anti),
                            residual=float(abs(anti * anti - chi)))


def _path_blocked(sys, start, end, skip):
    """Index of a foreign cut crossed by the segment [start, end], or None."""
    for j, (a, b) in sys.cuts.items():
        if j in skip:
            continue
        if abs(b - a) < 1e-12:
            continue
        if _segments_intersect(start, end, a, b):
            return j
    return None


def _segments_intersect(p1, p2, q1, q2, eps=1e-11):
    def cross(o, a, b):
        return ((a - o).real * (b - o).imag - (a - o).imag * (b - o).real)

    d1 = cross(q1, q2, p1)
    d2 = cross(q1, q2, p2)
    d3 = cross(p1, p2, q1)
    d4 = cross(p1, p2, q2)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
       ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)):
        return True
    return False


def _path_quadrature(f, d, tol=QUAD_TOL, start_nodes=64, cap=4096):
    """int over t in [0,1] of f(t) * d dt with nodes clustered at both ends.

    The substitution t = (1 - cos(pi s))/2 absorbs inverse-square-root behavior
    at either end (branch-point starts, near-band-edge Dirichlet endpoints).
    `f` receives the path parameter t, so integrands can form exact differences
    against the path start."""
    m = start_nodes
    prev = None
    while m <= cap:
        s, w = np.polynomial.legendre.leggauss(m)
        s = 0.5 * (s + 1.0)
        w = 0.5 * w
        t = 0.5 * (1.0 - np.cos(np.pi * s))
        dt = 0.5 * np.pi * np.sin(np.pi * s) * w
        val = np.sum(f(t) * dt) * d
        if prev is not None and abs(val - prev) < tol + 1e-8 * abs(val):
            return val
        prev = val
        m *= 2
    raise QuadratureStall(f"path quadrature did not settle below {tol} by {cap} nodes")


def _edge_root_factory(sys, k, start, dd, side_ref):
    """w_k along the path start + t*dd, where `start` is a band edge of cut k.

    Differences against the edge are formed exactly (the naive product
    (lam_k+ - z)(lam_k- - z) loses half the digits next to the edge).  The
    branch is anchored to the standard root at the path point farthest from
    the cut and continued node to node."""
    a, b = sys.cuts[k]
    if abs(start - b) <= abs(start - a):
        other_minus_edge = a - b
    else:
        other_minus_edge = b - a

    def wk(t):
        tt = t * dd
        v = np.sqrt((-tt) * (other_minus_edge - tt))
        z = start + tt
        dist = _segment_distance(z, a, b)
        i0 = int(np.argmax(dist))
        za = z[i0]
        if dist[i0] < 1e-9:
            u = (b - a) / abs(b - a) if abs(b - a) > 1e-12 else 1j
            side = 1.0
            if side_ref is not None:
                off = ((side_ref - a) / u).imag
                if abs(off) > 3e-12:
                    side = 1.0 if off > 0 else -1.0
            za = za + 2e-9 * side * (1j * u)
        ref = standard_root(sys, k, np.array([za]))[0]
        if abs(v[i0] - ref) > abs(v[i0] + ref):
            v = -v
        # continuity sweep outward from the anchor
        for i in range(i0 - 1, -1, -1):
            if abs(v[i] - v[i + 1]) > abs(v[i] + v[i + 1]):
                v[i] = -v[i]
        for i in range(i0 + 1, len(v)):
            if abs(v[i] - v[i - 1]) > abs(v[i] + v[i - 1]):
                v[i] = -v[i]
        return v

    return wk


def _nudge_off_cuts(sys, lam, side_ref=None):
    """Project quadrature nodes that fall (numerically) on a cut to a safe
    offset.  All hits on one cut go to the SAME side, chosen by the reference
    point (a path endpoint): per-node side choices would flip the branch of the
    standard root along a collinear path."""
    lam = np.array(lam, dtype=complex)
    for j, (a, b) in sys.cuts.items():
        if abs(b - a) < 1e-12:
            continue
        d = _segment_distance(lam, a, b)
        hit = d < 2e-12
        if np.any(hit):
            u = (b - a) / abs(b - a)
            side = 1.0
            if side_ref is not None:
                ref_off = ((side_ref - a) / u).imag
                if abs(ref_off) > 3e-12:
                    side = 1.0 if ref_off > 0 else -1.0
            z = lam[hit]
            offset = ((z - a) / u).imag          # signed distance to the cut line
            lam[hit] = z + (3e-12 * side - offset) * (1j * u)
    return lam


def _nearer_edge(cat, k, mu):
    """Band edge closer to mu; starting there keeps the (integrable) square-root
    singularity at the path start, where the node clustering handles it."""
    lam_m, lam_p = cat.lam_minus[k], cat.lam_plus[k]
    if abs(mu - lam_p) < abs(mu - lam_m):
        return lam_p, True
    return lam_m, False


def beta_offdiag(p, cat, sys, roots, d_n, k, cfg=DEFAULT_CFG, tol=QUAD_TOL):
    """beta^n_k = int_{lam_k-}^{mu*_k} zeta_n / sqrt(chi_p), |k| > R, k != n.

    For k != n the value is unchanged when lam_k- is replaced by lam_k+ (the
    a-period over Gamma_k vanishes), so the path starts at the nearer edge.
    """
    n = d_n.n
    mu = cat.mu[k]
    lam_m, lam_p = cat.lam_minus[k], cat.lam_plus[k]
    if min(abs(mu - lam_m), abs(mu - lam_p)) < ENDPOINT_COINCIDENCE_TOL:
        return 0.0 + 0.0j
    eps = roots.star_sign(k, on_cut="displace")
    if eps == 0:
        return 0.0 + 0.0j
    mu = roots.mu_side_point(k)

    start, _ = _nearer_edge(cat, k, mu)
    blocked = _path_blocked(sys, start, mu, skip={k})
    if blocked is not None:
        raise PathCrossesCut(
            f"straight path for beta^{n}_{k} crosses cut {blocked}; no rerouting"
        )

    gam = cat.gamma(k)
    sig_k = d_n.sigma.get(k, cat.tau(k))
    dd = mu - start

    if abs(gam) < 1e-8:
        # collapsed gap, mu off the cut: the singular factor is removable
        def f(t):
            lam = _nudge_off_cuts(sys, start + t * dd, side_ref=mu)
            return roots.w_product_ratio(d_n.sigma, n, lam, skip=(k,))
    else:
        wk = _edge_root_factory(sys, k, start, dd, mu)

        def f(t):
            lam = _nudge_off_cuts(sys, start + t * dd, side_ref=mu)
            base = roots.w_product_ratio(d_n.sigma, n, lam, skip=(k,))
            return base * (sig_k - (start + t * dd)) / wk(t)

    return eps * _path_quadrature(f, dd, tol)


def beta_diag(p, cat, sys, roots, d_n, n, cfg=DEFAULT_CFG, tol=QUAD_TOL):
    """beta^n_n mod 2pi; the normalization over the full cut contributes pi."""
    gam = cat.gamma(n)
    if abs(gam) <= 1e-9:
        raise ClosedGap(f"gap {n} is collapsed; use the z_n limit path instead")
    mu = cat.mu[n]
    lam_m, lam_p = cat.lam_minus[n], cat.lam_plus[n]
    if abs(mu - lam_m) < ENDPOINT_COINCIDENCE_TOL:
        return 0.0 + 0.0j, {"eps": 0}
    if abs(mu - lam_p) < ENDPOINT_COINCIDENCE_TOL:
        return np.pi + 0.0j, {"eps": 0}
    eps = roots.star_sign(n, on_cut="displace")
    if eps == 0:
        return 0.0 + 0.0j, {"eps": 0}
    mu = roots.mu_side_point(n)

    # switching the start to lam_n+ shifts the value by the half a-period pi
    start, switched = _nearer_edge(cat, n, mu)
    blocked = _path_blocked(sys, start, mu, skip={n})
    if blocked is not None:
        raise PathCrossesCut(
            f"straight path for beta^{n}_{n} crosses cut {blocked}; no rerouting"
        )

    dd = mu - start
    wn = _edge_root_factory(sys, n, start, dd, mu)

    def f(t):
        lam = _nudge_off_cuts(sys, start + t * dd, side_ref=mu)
        base = roots.w_product_ratio(d_n.sigma, n, lam, skip=(n,))
        return base / wn(t)

    val = eps * _path_quadrature(f, dd, tol)
    if switched:
        val = val + np.pi
    return _mod_2pi(val), {"eps": eps, "switched": switched}


def _mod_2pi(z):
    return complex(np.mod(z.real, 2 * np.pi), z.imag)


def _displace_into_sheet(sys, mu, prefer=None, skip=()):
    """mu displaced off any cut it lies inside.

    The side is the one holding `prefer` (the path start), so the straight
    path reaches the displaced endpoint without crossing that cut; without a
    usable reference the canonical +i*u side is taken."""
    for j, (a, b) in sys.cuts.items():
        if j in skip or abs(b - a) < 1e-12:
            continue
        if _segment_distance(np.array([mu]), a, b)[0] < 1e-10 \
                and min(abs(mu - a), abs(mu - b)) > 1e-13:
            u = (b - a) / abs(b - a)
            side = 1.0
            if prefer is not None:
                ref_off = ((prefer - a) / u).imag
                if abs(ref_off) > 3e-12:
                    side = 1.0 if ref_off > 0 else -1.0
            off = ((mu - a) / u).imag
            mu = mu + (1e-9 * side - off) * (1j * u)
    return mu


def _greedy_matching(sources, targets):
    """Pair each source to a distinct target, smallest distances first."""
    pairs = []
    cand = sorted(
        ((abs(s - t), i, j) for i, s in enumerate(sources) for j, t in enumerate(targets)),
        key=lambda c: (c[0], c[1], c[2]),
    )
    used_s, used_t = set(), set()
    for _, i, j in cand:
        if i in used_s or j in used_t:
            continue
        used_s.add(i)
        used_t.add(j)
        pairs.append((i, j))
    return sorted(pairs)


def beta_low(p, cat, sys, roots, d_n, cfg=DEFAULT_CFG, tol=QUAD_TOL):
    """Sum of the low-pair integrals lam_k- -> mu (|k| <= R), mod 2pi."""
    n = d_n.n
    low = sorted(k for k in cat.indices() if abs(k) <= cat.R)
    sources = [cat.lam_minus[k] for k in low]
    targets = [cat.mu[k] for k in low]
    matching = _greedy_matching(sources, targets)

    total = 0.0 + 0.0j
    note = []
    for i, j in matching:
        k = low[i]
        start, switched = _nearer_edge(cat, k, targets[j])
        end = _displace_into_sheet(sys, targets[j], prefer=start, skip={k})
        end = _displace_into_sheet(sys, end)  # own-cut hits take the + side
        note.append((k, low[j], switched))
        if switched and k == n:
            total = total + np.pi
        if abs(end - start) < ENDPOINT_COINCIDENCE_TOL:
            continue
        blocked = _path_blocked(sys, start, end, skip={k})
        if blocked is not None:
            raise PathCrossesCut(
                f"low path {k}->mu_{low[j]} crosses cut {blocked}"
            )
        # star sign at this Dirichlet eigenvalue pins the sheet; the
        # anti-discriminant is evaluated at the true mu, the canonical root at
        # the (possibly displaced) path endpoint
        edge_dist = min(min(abs(end - a), abs(end - b)) for a, b in sys.cuts.values())
        if edge_dist < 1e-9:
            eps = 1   # mu at a branch point: fixed sheet convention
        else:
            _, _, anti, _, _ = (x[0] for x in
                                scalars_batch(p, np.array([targets[j]]), cfg))
            sq = roots.sqrt_chi_p(np.array([end]))[0]
            if abs(anti) < 1e-9 * max(1.0, abs(sq)):
                eps = 1
            else:
                eps = 1 if (anti / sq).real > 0 else -1

        dd = end - start
        wk = _edge_root_factory(sys, k, start, dd, end)

        if k == n:
            def f(t, start=start, dd=dd, end=end, k=k, wk=wk):
                lam = _nudge_off_cuts(sys, start + t * dd, side_ref=end)
                base = roots.w_product_ratio(d_n.sigma, n, lam, skip=(k,))
                return base / wk(t)
        else:
            def f(t, start=start, dd=dd, end=end, k=k, wk=wk):
                lam = _nudge_off_cuts(sys, start + t * dd, side_ref=end)
                base = roots.w_product_ratio(d_n.sigma, n, lam, skip=(k,))
                sig = d_n.sigma.get(k, cat.tau(k))
                return base * (sig - (start + t * dd)) / wk(t)

        total += eps * _path_quadrature(f, dd, tol)
    return _mod_2pi(total), note


def theta(p, cat, sys, roots, d_n, n, cfg=DEFAULT_CFG, beta_parts=None):
    """theta_n = beta~^n + sum over open/off-center indices of beta^n_k, mod 2pi."""
    if abs(n) > cat.R and abs(cat.gamma(n)) <= 1e-9:
        raise ClosedGap(f"theta_{n} undefined: gap collapsed")
    lowsum, note = beta_low(p, cat, sys, roots, d_n, cfg)
    terms = {}
    for k in cat.indices():
        if abs(k) <= cat.R or k == n:
            continue
        if abs(cat.gamma(k)) + abs(cat.mu[k] - cat.tau(k)) <= K_ANGLE_TOL:
            continue
        terms[k] = beta_offdiag(p, cat, sys, roots, d_n, k, cfg)
    diag = 0.0 + 0.0j
    if abs(n) > cat.R:
        diag, dn_note = beta_diag(p, cat, sys, roots, d_n, n, cfg)
        note = {"matching": note, "eps_diag": dn_note["eps"]}
    else:
        note = {"matching": note}
    th = _mod_2pi(lowsum + sum(terms.values()) + diag)
    if beta_parts is not None:
        beta_parts.update({"beta_low": lowsum, "beta_terms": terms,
                           "beta_diag": diag, "branch_note": note})
    return th


def phase_angle(p, cat, sys, roots, d_n, n, cfg=DEFAULT_CFG):
    """theta_n - beta^n_n, the combination that stays analytic through collapse."""
    lowsum, _ = beta_low(p, cat, sys, roots, d_n, cfg)
    acc = lowsum
    for k in cat.indices():
        if abs(k) <= cat.R or k == n:
            continue
        if abs(cat.gamma(k)) + abs(cat.mu[k] - cat.tau(k)) <= K_ANGLE_TOL:
            continue
        acc += beta_offdiag(p, cat, sys, roots, d_n, k, cfg)
    return acc


def compute_angles(p, cat, sys, roots, diffs, ns=None, cfg=DEFAULT_CFG, pmap=map):
    ns = [n for n in (cat.indices() if ns is None else ns)
          if abs(n) <= cat.R or abs(cat.gamma(n)) > 1e-9]
    aset = AngleSet()

    def one(n):
        parts = {}
        th = theta(p, cat, sys, roots, diffs[n], n, cfg, beta_parts=parts)
        parts["theta"] = th
        parts["im_residual"] = abs(th.imag)
        return n, parts

    for n, parts in pmap(one, ns):
        aset.entries[n] = parts
    return aset
