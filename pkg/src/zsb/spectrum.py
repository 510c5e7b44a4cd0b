"""Localization of periodic/Dirichlet/critical spectra and band tracing.

Roots are hunted per disk D_n = {|lambda - n pi| < pi/6}: an argument-principle
winding decides how many live there, Newton (with the exact lambda-derivative
carried by the monodromy integrator) polishes them.  The threshold R is the
smallest index beyond which every disk holds the asymptotic count (2 periodic,
1 Dirichlet, 1 critical); everything inside B_R = {|lambda| < R pi + pi/6} is
found by recursive rectangle subdivision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BandEscape,
    ClosedGap,
    ClusterUnresolved,
    NewtonDivergence,
    SymmetryViolation,
    WindingMismatch,
)
from .monodromy import DEFAULT_CFG, chi_d_batch, delta_batch
from .potential import FOCUSING

DISK_RADIUS = np.pi / 6
DOUBLE_ROOT_TOL = 1e-9
# below this estimated gap, double precision cannot distinguish the pair from a
# genuine double root of chi_p (Delta carries ~1e-15 noise, gap ~ sqrt of it)
GAP_MEASURABILITY_FLOOR = 1e-6
ROOT_RESIDUAL_TOL = 1e-9
MAX_SUBDIVISION_DEPTH = 40


def _scout_cfg(p, cfg):
    """Cheap integrator for integer-valued decisions (windings, moments)."""
    from .monodromy import IntegratorConfig

    steps = max(64, 2 * p.max_mode + 1)
    if steps >= cfg.steps:
        return cfg
    return IntegratorConfig(steps=steps, richardson=False)


@dataclass
class SpectrumCatalog:
    n_max: int
    R: int = 0
    lam_plus: dict = field(default_factory=dict)
    lam_minus: dict = field(default_factory=dict)
    mult: dict = field(default_factory=dict)       # 2 when the pair collapsed
    mu: dict = field(default_factory=dict)
    lamdot: dict = field(default_factory=dict)
    cluster: list = field(default_factory=list)    # (root, multiplicity) in B_R
    real_type: str = "generic"

    def gamma(self, n):
        return self.lam_plus[n] - self.lam_minus[n]

    def tau(self, n):
        return 0.5 * (self.lam_plus[n] + self.lam_minus[n])

    def indices(self):
        return range(-self.n_max, self.n_max + 1)

    def open_indices(self, tol=1e-8):
        return [n for n in self.indices() if abs(self.gamma(n)) > tol]


# ----------------------------------------------------------------------
# winding numbers by accumulated phase increments


def _winding_from_values(vals):
    """Winding numbers for rows of contour samples; None where unreliable."""
    v = np.concatenate([vals, vals[:, :1]], axis=1)
    ratios = v[:, 1:] / v[:, :-1]
    dphi = np.angle(ratios)
    bad = (np.max(np.abs(dphi), axis=1) > 0.8 * np.pi) | np.any(
        ~np.isfinite(ratios) | (np.abs(v[:, :-1]) == 0.0), axis=1
    )
    total = np.sum(dphi, axis=1) / (2 * np.pi)
    w = np.rint(total).astype(int)
    w_ok = np.abs(total - w) < 0.25
    out = []
    for i in range(vals.shape[0]):
        out.append(None if (bad[i] or not w_ok[i]) else int(w[i]))
    return out


def _values_on_points(p, pts, kind, cfg):
    if kind == "chi_p":
        d, _ = delta_batch(p, pts, cfg)
        return d * d - 4.0
    if kind == "chi_D":
        c, _ = chi_d_batch(p, pts, cfg)
        return c
    if kind == "delta_dot":
        _, dd = delta_batch(p, pts, cfg)
        return dd
    raise ValueError(kind)


def circle_windings(p, centers, radius, kind, cfg=DEFAULT_CFG, nodes=128):
    """Winding of chi_p / chi_D / Delta-dot over circles, node-doubling to 4096."""
    centers = np.asarray(centers, dtype=complex)
    result = [None] * len(centers)
    todo = list(range(len(centers)))
    while todo and nodes <= 4096:
        t = np.exp(2j * np.pi * np.arange(nodes) / nodes)
        pts = (centers[todo, None] + radius * t[None, :]).ravel()
        vals = _values_on_points(p, pts, kind, cfg).reshape(len(todo), nodes)
        ws = _winding_from_values(vals)
        still = []
        for i, w in zip(todo, ws):
            if w is None:
                still.append(i)
            else:
                result[i] = w
        todo = still
        nodes *= 2
    return result


def _rect_winding(p, lo, hi, kind, cfg, nodes_per_side=48):
    """Winding over the rectangle [Re lo, Re hi] x [Im lo, Im hi]."""
    for nps in (nodes_per_side, 2 * nodes_per_side, 4 * nodes_per_side):
        t = np.linspace(0.0, 1.0, nps, endpoint=False)
        a, b = lo, complex(hi.real, lo.imag)
        c, d = hi, complex(lo.real, hi.imag)
        pts = np.concatenate([a + (b - a) * t, b + (c - b) * t,
                              c + (d - c) * t, d + (a - d) * t])
        vals = _values_on_points(p, pts, kind, cfg)[None, :]
        w = _winding_from_values(vals)[0]
        if w is not None:
            return w
    return None


def _moment_roots(p, center, radius, count, kind, cfg, nodes=512):
    """Roots inside a circle from power sums s_j = (1/2pi i) oint z^j f'/f dz."""
    t = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    pts = center + radius * t
    f, df = _eval_f_df(p, pts, kind, cfg)
    base = df / f * (radius * t)  # includes dz/(2 pi i) up to 1/nodes
    sums = []
    for j in range(1, count + 1):
        sums.append(np.sum(base * (pts - center) ** j) / nodes)
    # Newton's identities: elementary symmetric functions of (roots - center)
    e = [1.0 + 0j]
    for j in range(1, count + 1):
        acc = 0j
        for i in range(1, j + 1):
            acc += (-1) ** (i - 1) * e[j - i] * sums[i - 1]
        e.append(acc / j)
    coeffs = [(-1) ** j * e[j] for j in range(count + 1)]
    return np.roots(coeffs) + center if count > 0 else np.array([])


def cluster_roots(p, lo, hi, kind, cfg=DEFAULT_CFG, scout=None, depth=0):
    """All roots (with multiplicity) of the chosen function in a rectangle.

    Counting (windings, moment extraction) runs on the cheap `scout` integrator;
    Newton polish uses the full one.
    """
    scout = scout or _scout_cfg(p, cfg)
    if depth > MAX_SUBDIVISION_DEPTH:
        raise ClusterUnresolved(f"subdivision depth exceeded near {0.5 * (lo + hi)}")
    w = _rect_winding(p, lo, hi, kind, scout)
    if w is None:
        # a root sits (numerically) on the boundary: nudge the box
        pad = 1e-3 * (1 + depth) * (1 + 1j)
        return cluster_roots(p, lo - pad, hi + pad, kind, cfg, scout, depth + 1)
    if w == 0:
        return []
    diag = abs(hi - lo)
    if w == 1:
        root = _newton_scalar(p, 0.5 * (lo + hi), kind, cfg, radius=diag)
        if root is not None and lo.real - 1e-6 <= root.real <= hi.real + 1e-6 \
                and lo.imag - 1e-6 <= root.imag <= hi.imag + 1e-6:
            return [(root, 1)]
    elif diag < 0.08:
        # small multi-root box: circumscribed-circle moment extraction
        center = 0.5 * (lo + hi)
        radius = 0.75 * diag
        wc = circle_windings(p, [center], radius, kind, scout, nodes=256)[0]
        if wc == w:
            approx = _moment_roots(p, center, radius, w, kind, scout)
            roots = []
            for r in approx:
                pol = _newton_scalar(p, r, kind, cfg, radius=diag)
                roots.append(pol if pol is not None else r)
            return _polish_groups(p, _group_multiplicities(roots), kind, cfg)
    # split the long side, with a slightly irrational ratio so roots do not
    # land on subdivision lines
    frac = 0.5 + 0.03 * ((depth % 5) - 2)
    out = []
    if (hi.real - lo.real) >= (hi.imag - lo.imag):
        mid = lo.real + frac * (hi.real - lo.real)
        out += cluster_roots(p, lo, complex(mid, hi.imag), kind, cfg, scout, depth + 1)
        out += cluster_roots(p, complex(mid, lo.imag), hi, kind, cfg, scout, depth + 1)
    else:
        mid = lo.imag + frac * (hi.imag - lo.imag)
        out += cluster_roots(p, lo, complex(hi.real, mid), kind, cfg, scout, depth + 1)
        out += cluster_roots(p, complex(lo.real, mid), hi, kind, cfg, scout, depth + 1)
    return out


def _group_multiplicities(roots, tol=3 * GAP_MEASURABILITY_FLOOR):
    grouped = []
    for r in sorted(roots, key=lambda z: (z.real, z.imag)):
        for i, (g, m) in enumerate(grouped):
            if abs(r - g) < tol:
                grouped[i] = ((g * m + r) / (m + 1), m + 1)
                break
        else:
            grouped.append((r, 1))
    return grouped


def _polish_groups(p, grouped, kind, cfg):
    """Re-polish multiplicity-2 roots on the derivative (plain Newton is noisy there)."""
    out = []
    for root, m in grouped:
        if m == 2 and kind == "chi_p":
            better = _newton_scalar(p, root, "delta_dot", cfg, radius=0.1)
            if better is not None and abs(better - root) < 1e-5:
                root = better
        out.append((root, m))
    return out


# ----------------------------------------------------------------------
# Newton polishing


def _eval_f_df(p, lam, kind, cfg, shift=0.0):
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if kind == "chi_D":
        f, df = chi_d_batch(p, lam, cfg)
        return f, df
    d, dd = delta_batch(p, lam, cfg)
    if kind == "chi_p":
        return d * d - 4.0, 2.0 * d * dd
    if kind == "delta_dot":
        # derivative of Delta-dot by a central difference of Delta-dot itself
        h = 1e-6
        _, dp = delta_batch(p, lam + h, cfg)
        _, dm = delta_batch(p, lam - h, cfg)
        return dd, (dp - dm) / (2 * h)
    if kind == "delta_shift":
        return d - shift, dd
    raise ValueError(kind)


def _newton_scalar(p, seed, kind, cfg, shift=0.0, tol=1e-13, maxit=60, radius=None):
    lam = complex(seed)
    for _ in range(maxit):
        f, df = _eval_f_df(p, np.array([lam]), kind, cfg, shift)
        f, df = f[0], df[0]
        if df == 0:
            return None
        step = f / df
        lam -= step
        if radius is not None and abs(lam - seed) > 4 * (radius + 0.3):
            return None
        if abs(step) < tol:
            return lam
    f, _ = _eval_f_df(p, np.array([lam]), kind, cfg, shift)
    return lam if abs(f[0]) < 1e-9 else None


def _newton_batch(p, seeds, kind, cfg, shifts=None, tol=1e-13, maxit=60, max_step=0.2):
    lam = np.asarray(seeds, dtype=complex).copy()
    shifts = np.zeros_like(lam) if shifts is None else np.asarray(shifts, dtype=complex)
    active = np.ones(lam.shape[0], dtype=bool)
    for _ in range(maxit):
        if not active.any():
            break
        if kind == "delta_shift":
            d, dd = delta_batch(p, lam[active], cfg)
            f, df = d - shifts[active], dd
        else:
            f, df = _eval_f_df(p, lam[active], kind, cfg)
        df = np.where(df == 0, 1e-300, df)
        step = f / df
        step = step * (max_step / np.maximum(np.abs(step), max_step))
        lam[active] -= step
        sub = np.abs(step) >= tol
        idx = np.where(active)[0]
        active[idx[~sub]] = False
    return lam


# ----------------------------------------------------------------------
# pairing helpers


def _pair_conjugate(roots, tol=1e-8):
    """Group roots (root, mult) into conjugate pairs; returns [(lam-, lam+)]."""
    items = []
    for r, m in roots:
        items.extend([r] * m)
    items.sort(key=lambda z: (round(z.real, 10), z.imag))
    used = [False] * len(items)
    pairs = []
    for i, z in enumerate(items):
        if used[i]:
            continue
        if abs(z.imag) <= tol:
            # real eigenvalue: partner is the next real one at the same spot
            partner = None
            for j in range(i + 1, len(items)):
                if not used[j] and abs(items[j] - z) <= 10 * tol:
                    partner = j
                    break
            if partner is None:
                raise SymmetryViolation(
                    f"real eigenvalue {z} without even multiplicity", violation=abs(z.imag)
                )
            used[i] = used[partner] = True
            pairs.append((z, items[partner]))
            continue
        best, bestd = None, np.inf
        for j in range(i + 1, len(items)):
            if not used[j]:
                dist = abs(items[j] - np.conjugate(z))
                if dist < bestd:
                    best, bestd = j, dist
        if best is None or bestd > 100 * tol:
            raise SymmetryViolation(f"eigenvalue {z} has no conjugate partner",
                                    violation=bestd)
        used[i] = used[best] = True
        zm, zp = (z, items[best]) if z.imag < items[best].imag else (items[best], z)
        pairs.append((zm, zp))
    pairs.sort(key=lambda pr: (pr[0].real + pr[1].real))
    return pairs


def _pair_lexicographic(roots):
    items = []
    for r, m in roots:
        items.extend([r] * m)
    items.sort(key=lambda z: (z.real, z.imag))
    if len(items) % 2:
        raise WindingMismatch("odd periodic multiplicity in B_R")
    return [(items[2 * i], items[2 * i + 1]) for i in range(len(items) // 2)]


# ----------------------------------------------------------------------
# public operations


def locate_periodic_spectrum(p, n_max, cfg=DEFAULT_CFG, enforce_R=None):
    """Periodic eigenvalue pairs for |n| <= n_max and the threshold R."""
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    cat = SpectrumCatalog(n_max=n_max, real_type=p.real_type)

    ns = np.arange(-n_max, n_max + 1)
    ws = circle_windings(p, ns * np.pi, DISK_RADIUS, "chi_p", _scout_cfg(p, cfg))
    good = {int(n): (w == 2) for n, w in zip(ns, ws)}

    R = 0 if enforce_R is None else enforce_R
    for n in ns:
        if not good[int(n)]:
            R = max(R, abs(int(n)))
    if R >= n_max:
        raise WindingMismatch(f"no stable disk count below n_max={n_max} (R={R})")

    # R must also be large enough that B_R really holds its 4R+2 eigenvalues
    # (a low pair can leave D_0 while every remaining disk still counts two)
    while True:
        cat.R = R
        try:
            _locate_cluster_pairs(p, cat, cfg)
            break
        except WindingMismatch:
            R += 1
            if R >= n_max:
                raise

    outer = [int(n) for n in ns if abs(n) > cat.R]
    _locate_outer_pairs(p, cat, outer, cfg)
    return cat


def _locate_outer_pairs(p, cat, outer, cfg, seeds=None):
    if not outer:
        return
    if seeds is None:
        seeds = np.array([n * np.pi for n in outer], dtype=complex)
    lamdot = _critical_batch(p, np.asarray(seeds, dtype=complex), cfg)

    h = 1e-6
    stacked = np.concatenate([lamdot, lamdot + h, lamdot - h])
    ds, dds = delta_batch(p, stacked, cfg)
    d0 = ds[: len(outer)]
    _, ddp, ddm = np.split(dds, 3)
    dddot = (ddp - ddm) / (2 * h)
    signs = np.array([2.0 * (-1) ** n for n in outer], dtype=complex)
    off = np.sqrt(2.0 * (signs - d0) / dddot)

    open_idx = np.where(np.abs(off) >= 0.5 * GAP_MEASURABILITY_FLOOR)[0]
    for i, n in enumerate(outer):
        if i not in open_idx:
            cat.lam_plus[n] = cat.lam_minus[n] = complex(lamdot[i])
            cat.mult[n] = 2

    if open_idx.size:
        sub_signs = signs[open_idx]
        r1 = _newton_batch(p, lamdot[open_idx] + off[open_idx], "delta_shift",
                           cfg, shifts=sub_signs)
        r2 = _newton_batch(p, lamdot[open_idx] - off[open_idx], "delta_shift",
                           cfg, shifts=sub_signs)
        dr1, _ = delta_batch(p, r1, cfg)
        dr2, _ = delta_batch(p, r2, cfg)
        for j, i in enumerate(open_idx):
            n = outer[i]
            a, b, s = r1[j], r2[j], signs[i]
            if abs(dr1[j] - s) > ROOT_RESIDUAL_TOL or abs(dr2[j] - s) > ROOT_RESIDUAL_TOL:
                raise NewtonDivergence(f"periodic Newton failed in disk {n}")
            if abs(a - b) < GAP_MEASURABILITY_FLOOR:
                lam = lamdot[i]
                cat.lam_plus[n], cat.lam_minus[n], cat.mult[n] = lam, lam, 2
                continue
            cat.mult[n] = 1
            if cat.real_type == FOCUSING:
                zp, zm = (a, b) if a.imag >= b.imag else (b, a)
            else:
                zm, zp = sorted([a, b], key=lambda z: (z.real, z.imag))
            cat.lam_plus[n], cat.lam_minus[n] = zp, zm


def _critical_batch(p, seeds, cfg, max_step=0.2):
    """Newton on Delta-dot (finite-difference second derivative), per-component."""
    x = np.asarray(seeds, dtype=complex).copy()
    active = np.ones(x.shape[0], dtype=bool)
    h = 1e-6
    for _ in range(60):
        if not active.any():
            break
        xa = x[active]
        stacked = np.concatenate([xa, xa + h, xa - h])
        _, fs = delta_batch(p, stacked, cfg)
        f, fp, fm = np.split(fs, 3)
        df = (fp - fm) / (2 * h)
        df = np.where(df == 0, 1e-300, df)
        step = f / df
        step = step * (max_step / np.maximum(np.abs(step), max_step))
        x[active] -= step
        idx = np.where(active)[0]
        active[idx[np.abs(step) < 1e-12]] = False
    _, res = delta_batch(p, x, cfg)
    if np.max(np.abs(res)) > 1e-8:
        worst = int(np.argmax(np.abs(res)))
        raise NewtonDivergence(f"critical-point iteration stalled near {seeds[worst]}")
    return x


def _locate_cluster_pairs(p, cat, cfg):
    R = cat.R
    rad = R * np.pi + DISK_RADIUS
    lo = complex(-rad - 0.05, -rad - 0.05)
    hi = complex(rad + 0.05, rad + 0.05)
    roots = cluster_roots(p, lo, hi, "chi_p", cfg)
    roots = [(r, m) for r, m in roots if abs(r) < rad + 0.04]
    total = sum(m for _, m in roots)
    if total != 4 * R + 2:
        raise WindingMismatch(
            f"B_R holds {total} periodic eigenvalues, expected {4 * R + 2}"
        )
    cat.cluster = sorted(roots, key=lambda rm: (rm[0].real, rm[0].imag))
    if cat.real_type == FOCUSING:
        pairs = _pair_conjugate(roots)
    else:
        pairs = _pair_lexicographic(roots)
    for idx, (zm, zp) in enumerate(pairs):
        n = idx - R
        cat.lam_plus[n], cat.lam_minus[n] = zp, zm
        cat.mult[n] = 2 if abs(zp - zm) < DOUBLE_ROOT_TOL else 1


def locate_dirichlet_spectrum(p, cat, cfg=DEFAULT_CFG):
    """Fill the Dirichlet eigenvalues mu_n; may raise R (maximum of thresholds)."""
    ns = np.arange(-cat.n_max, cat.n_max + 1)
    ws = circle_windings(p, ns * np.pi, DISK_RADIUS, "chi_D", _scout_cfg(p, cfg))
    R = cat.R
    for n, w in zip(ns, ws):
        if w != 1:
            R = max(R, abs(int(n)))
    if R >= cat.n_max:
        raise WindingMismatch(f"Dirichlet count unstable below n_max (R={R})")
    while True:
        if R > cat.R:
            # threshold mismatch resolved by the maximum: regroup the periodic part
            rebuilt = locate_periodic_spectrum(p, cat.n_max, cfg, enforce_R=R)
            cat.R = rebuilt.R
            cat.lam_plus, cat.lam_minus = rebuilt.lam_plus, rebuilt.lam_minus
            cat.mult, cat.cluster = rebuilt.mult, rebuilt.cluster
            R = cat.R
        rad = cat.R * np.pi + DISK_RADIUS
        low = cluster_roots(p, complex(-rad - 0.05, -rad - 0.05),
                            complex(rad + 0.05, rad + 0.05), "chi_D", cfg)
        low = [(r, m) for r, m in low if abs(r) < rad + 0.04]
        count = sum(m for _, m in low)
        if count == 2 * cat.R + 1:
            break
        R = cat.R + 1
        if R >= cat.n_max:
            raise WindingMismatch(
                f"B_R holds {count} Dirichlet eigenvalues, expected {2 * cat.R + 1}"
            )

    outer = [int(n) for n in ns if abs(n) > cat.R]
    seeds = np.array([n * np.pi for n in outer], dtype=complex)
    roots = _newton_batch(p, seeds, "chi_D", cfg)
    vals, _ = chi_d_batch(p, roots, cfg)
    for i, n in enumerate(outer):
        if abs(vals[i]) > 1e-8 or abs(roots[i] - n * np.pi) > 2 * DISK_RADIUS:
            raise NewtonDivergence(f"Dirichlet Newton failed in disk {n}")
        cat.mu[n] = complex(roots[i])
    flat = []
    for r, m in sorted(low, key=lambda rm: (rm[0].real, rm[0].imag)):
        flat.extend([r] * m)
    for idx, r in enumerate(flat):
        cat.mu[idx - cat.R] = r
    return cat


def locate_critical_points(p, cat, cfg=DEFAULT_CFG):
    """Fill the roots of Delta-dot; one per disk beyond R, cluster inside."""
    outer = [n for n in cat.indices() if abs(n) > cat.R]
    seeds = np.array([cat.tau(n) for n in outer], dtype=complex)
    roots = _critical_batch(p, seeds, cfg)
    for i, n in enumerate(outer):
        cat.lamdot[n] = complex(roots[i])

    rad = cat.R * np.pi + DISK_RADIUS
    low = cluster_roots(p, complex(-rad - 0.05, -rad - 0.05),
                        complex(rad + 0.05, rad + 0.05), "delta_dot", cfg)
    low = [(r, m) for r, m in low if abs(r) < rad + 0.04]
    count = sum(m for _, m in low)
    if count != 2 * cat.R + 1:
        raise WindingMismatch(
            f"B_R holds {count} critical points, expected {2 * cat.R + 1}"
        )
    flat = []
    for r, m in sorted(low, key=lambda rm: (rm[0].real, rm[0].imag)):
        flat.extend([r] * m)
    for idx, r in enumerate(flat):
        cat.lamdot[idx - cat.R] = r
    return cat


def build_catalog(p, n_max, cfg=DEFAULT_CFG):
    """Full catalog: periodic pairs, Dirichlet eigenvalues, critical points."""
    cat = locate_periodic_spectrum(p, n_max, cfg)
    locate_dirichlet_spectrum(p, cat, cfg)
    locate_critical_points(p, cat, cfg)
    return cat


def refine_catalog(p, ref, cfg=DEFAULT_CFG):
    """Catalog for a nearby potential, Newton-seeded from a reference catalog.

    Keeps R and the index assignment of `ref` (continuity pairing), which makes
    finite-difference stencils across the catalog well posed.
    """
    cat = SpectrumCatalog(n_max=ref.n_max, R=ref.R, real_type=p.real_type)
    ns = list(ref.indices())

    # polish the critical points of all previously-collapsed pairs in one batch
    doubles = [n for n in ns if ref.mult.get(n) == 2]
    double_info = {}
    if doubles:
        lam = _critical_batch(p, np.array([ref.lamdot[n] for n in doubles]), cfg)
        h = 1e-6
        stacked = np.concatenate([lam, lam + h, lam - h])
        ds, dds = delta_batch(p, stacked, cfg)
        d0 = ds[: len(doubles)]
        _, ddp, ddm = np.split(dds, 3)
        dddot = (ddp - ddm) / (2 * h)
        for i, n in enumerate(doubles):
            s = 2.0 * (-1) ** n
            off = np.sqrt(2.0 * (s - d0[i]) / dddot[i])
            double_info[n] = (complex(lam[i]), complex(off))

    seeds, signs, slots = [], [], []
    for n in ns:
        s = 2.0 * (-1) ** n
        if n in double_info:
            lam, off = double_info[n]
            if abs(off) < 0.5 * GAP_MEASURABILITY_FLOOR:
                cat.lam_plus[n] = cat.lam_minus[n] = lam
                cat.mult[n] = 2
                continue
            seeds += [lam + off, lam - off]   # the gap opened along the stencil
        else:
            seeds += [ref.lam_plus[n], ref.lam_minus[n]]
        signs += [s, s]
        slots.append(n)

    if slots:
        roots = _newton_batch(p, np.array(seeds, dtype=complex), "delta_shift",
                              cfg, shifts=np.array(signs, dtype=complex))
        vals, _ = delta_batch(p, roots, cfg)
        k = 0
        for n in slots:
            a, b = roots[2 * k], roots[2 * k + 1]
            s = 2.0 * (-1) ** n
            if abs(vals[2 * k] - s) > 1e-8 or abs(vals[2 * k + 1] - s) > 1e-8:
                raise NewtonDivergence(f"refine: periodic reseed failed at {n}")
            if abs(a - b) < GAP_MEASURABILITY_FLOOR:
                cat.lam_plus[n] = cat.lam_minus[n] = a
                cat.mult[n] = 2
            else:
                cat.mult[n] = 1
                ra, rb = ref.lam_plus[n], ref.lam_minus[n]
                if abs(a - ra) + abs(b - rb) <= abs(a - rb) + abs(b - ra):
                    cat.lam_plus[n], cat.lam_minus[n] = a, b
                else:
                    cat.lam_plus[n], cat.lam_minus[n] = b, a
            k += 1

    mu_seeds = np.array([ref.mu[n] for n in ns], dtype=complex)
    mu = _newton_batch(p, mu_seeds, "chi_D", cfg)
    ld = _critical_batch(p, np.array([ref.lamdot[n] for n in ns], dtype=complex), cfg)
    for i, n in enumerate(ns):
        cat.mu[n] = complex(mu[i])
        cat.lamdot[n] = complex(ld[i])
    cat.cluster = [(cat.lam_plus[n], cat.mult[n]) for n in ns if abs(n) <= cat.R]
    return cat


def completeness_audit(p, cat, cfg=DEFAULT_CFG):
    """Winding of chi_p over a circle separating disk n_max from n_max + 1."""
    radius = cat.n_max * np.pi + np.pi / 2
    w = circle_windings(p, [0.0], radius, "chi_p", _scout_cfg(p, cfg), nodes=512)[0]
    expected = 2 * (2 * cat.n_max + 1)
    return w, expected


def check_real_type_symmetry(cat, tol=1e-8):
    """Conjugation symmetry of a focusing catalog; returns the max violation."""
    worst, worst_n = 0.0, None
    for n in cat.indices():
        if cat.mult.get(n, 1) == 2:
            v = abs(cat.lam_plus[n].imag)  # collapsed pairs must sit on the real line
        else:
            v = abs(cat.lam_minus[n] - np.conjugate(cat.lam_plus[n]))
            if cat.lam_plus[n].imag < -tol:
                v = max(v, -cat.lam_plus[n].imag)
        if v > worst:
            worst, worst_n = v, n
    eigs = []
    for r, m in cat.cluster:
        eigs.extend([r] * m)
    for z in eigs:
        if abs(z.imag) <= tol:
            same = sum(1 for w in eigs if abs(w - z) <= 10 * tol)
            if same % 2:
                raise SymmetryViolation("real cluster eigenvalue with odd multiplicity",
                                        worst_index=None, violation=abs(z.imag))
        else:
            d = min(abs(w - np.conjugate(z)) for w in eigs)
            if d > worst:
                worst, worst_n = d, None
    if worst > tol:
        raise SymmetryViolation(f"conjugation symmetry violated by {worst:.3e}",
                                worst_index=worst_n, violation=worst)
    return {"max_violation": worst, "worst_index": worst_n}


@dataclass
class SpectralBand:
    n: int
    samples: list            # (u, v) with u = a_n(v)
    delta_values: list
    endpoints: tuple          # (lam_minus, lam_plus)


def trace_spectral_band(p, cat, n, cfg=DEFAULT_CFG, steps=64):
    """Continuation of Im Delta(u+iv)/v = 0 from the critical point to lam_n+-."""
    if abs(n) <= cat.R:
        raise ValueError("band tracing is defined for |n| > R")
    gam = cat.gamma(n)
    if abs(gam) < DOUBLE_ROOT_TOL:
        raise ClosedGap(f"gap {n} is collapsed")
    lam_p, lam_m = cat.lam_plus[n], cat.lam_minus[n]
    vmax = lam_p.imag
    u0 = cat.lamdot[n].real
    box = 4 * abs(gam) + 0.5

    def newton_u(u, v):
        for _ in range(50):
            d, dd = delta_batch(p, np.array([complex(u, v)]), cfg)
            f = d[0].imag / v
            fp = dd[0].imag / v
            if fp == 0:
                raise BandEscape(f"flat band equation at v={v}")
            step = f / fp
            u -= step
            if abs(complex(u, v) - cat.lamdot[n]) > box:
                raise BandEscape(f"band left its box at v={v}")
            if abs(step) < 1e-13:
                return u
        raise BandEscape(f"band Newton stalled at v={v}")

    samples = [(u0, 0.0)]
    for sgn in (1, -1):
        u = u0
        for j in range(1, steps + 1):
            v = sgn * vmax * j / steps
            u = newton_u(u, v)
            samples.append((u, v))
    samples.sort(key=lambda s: s[1])
    lams = np.array([complex(u, v) for u, v in samples])
    dvals, _ = delta_batch(p, lams, cfg)
    return SpectralBand(n=n, samples=samples, delta_values=list(dvals),
                        endpoints=(lam_m, lam_p))
