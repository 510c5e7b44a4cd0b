"""Numerical Poisson brackets on truncated Fourier phase space.

Gradients are central differences of pipeline functionals with respect to the
real and imaginary parts of each Fourier coefficient (recombined into Wirtinger
derivatives); the bracket is the Parseval pairing

    {F, G} = -i sum_k [ dF/dc1_k dG/dc2_{-k} - dF/dc2_k dG/dc1_{-k} ].

Every stencil potential is analyzed with a workspace reseeded from the base
point, which keeps root indexing and angle branches coherent across the
stencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .birkhoff import Workspace
from .errors import BranchFlip
from .monodromy import delta_batch
from .potential import Potential, from_fourier, nls_hamiltonian
from .errors import ClosedGap

DEFAULT_FD_STEP = 1e-5


@dataclass
class GradientVector:
    M: int
    g1: dict                    # k -> dF/dc1_k
    g2: dict                    # k -> dF/dc2_k
    anti_residual: float = 0.0  # max anti-holomorphic part, a branch diagnostic


@dataclass
class BracketReport:
    values: dict                # (name_a, name_b) -> bracket value
    max_deviation: float
    fd_step: float
    M: int
    skipped: list = field(default_factory=list)


def _perturbed(p, j, k, delta):
    modes = dict(p.modes)
    c1, c2 = modes.get(k, (0j, 0j))
    if j == 1:
        c1 = c1 + delta
    else:
        c2 = c2 + delta
    modes[k] = (c1, c2)
    return from_fourier([(kk, a, b) for kk, (a, b) in modes.items()])


def _recenter(val, base):
    """Pull an angle-like value onto the branch nearest the base point."""
    if base is None or not np.isfinite(base.real):
        return val
    k = np.round((val.real - base.real) / (2 * np.pi))
    return val - 2 * np.pi * k


def evaluate_functionals(ws, specs, base=None):
    """Values of the requested functionals on one workspace."""
    out = {}
    for spec in specs:
        kind = spec[0]
        if kind == "H":
            out[spec] = complex(nls_hamiltonian(ws.p))
        elif kind == "Delta":
            lam = spec[1]
            d, _ = delta_batch(ws.p, np.array([lam], dtype=complex), ws.cfg)
            out[spec] = complex(d[0])
        elif kind == "I":
            out[spec] = complex(ws.action(spec[1]))
        elif kind == "theta":
            val = complex(ws.theta(spec[1]))
            out[spec] = _recenter(val, base.get(spec) if base else None)
        elif kind == "x" or kind == "y":
            n = spec[1]
            cat = ws.cat
            if abs(n) > cat.R:
                zp, zm = ws.z_pair(n)
                xi_n = ws.xi(n)
                ph = ws.phase(n)
                x = xi_n / (2 * np.sqrt(2)) * (zp * np.exp(1j * ph) + zm * np.exp(-1j * ph))
                y = xi_n / (2 * np.sqrt(2) * 1j) * (zp * np.exp(1j * ph) - zm * np.exp(-1j * ph))
            else:
                I_n = ws.action(n)
                th = _recenter(complex(ws.theta(n)),
                               base.get(("theta", n)) if base else None)
                # i sqrt(-2I) is the analytic branch that stays i sqrt+ on focusing
                root = 1j * np.sqrt(-2 * I_n)
                x, y = root * np.cos(th), root * np.sin(th)
            out[spec] = complex(x if kind == "x" else y)
        else:
            raise ValueError(f"unknown functional {spec}")
    return out


class _BareWorkspace:
    """Stand-in for functionals that never touch the spectral pipeline."""

    def __init__(self, p, cfg):
        from .monodromy import DEFAULT_CFG

        self.p = p
        self.cfg = cfg or DEFAULT_CFG


def _stencil_gradients(p, specs, M, h, cfg=None, n_max=None):
    """Wirtinger gradients of several functionals sharing one stencil."""
    n_max = n_max or max(8, M + 2)
    pipeline_free = all(s[0] in ("H", "Delta") for s in specs)
    if pipeline_free:
        ws0 = _BareWorkspace(p, cfg)
    else:
        ws0 = Workspace.build(p, n_max, cfg)
    base = evaluate_functionals(ws0, specs)

    ks = range(-M, M + 1)
    vals = {}
    for j in (1, 2):
        for k in ks:
            for part, delta in (("re", h), ("im", 1j * h)):
                for sgn in (+1, -1):
                    q = _perturbed(p, j, k, sgn * delta)
                    if pipeline_free:
                        wsq = _BareWorkspace(q, cfg)
                    else:
                        wsq = Workspace.build_near(q, ws0)
                    vals[(j, k, part, sgn)] = evaluate_functionals(wsq, specs, base)

    grads = {}
    for spec in specs:
        g1, g2, anti = {}, {}, 0.0
        for k in ks:
            for j, store in ((1, g1), (2, g2)):
                d_re = (vals[(j, k, "re", 1)][spec] - vals[(j, k, "re", -1)][spec]) / (2 * h)
                d_im = (vals[(j, k, "im", 1)][spec] - vals[(j, k, "im", -1)][spec]) / (2 * h)
                store[k] = 0.5 * (d_re - 1j * d_im)
                anti = max(anti, abs(0.5 * (d_re + 1j * d_im)))
        grads[spec] = GradientVector(M=M, g1=g1, g2=g2, anti_residual=anti)
    return grads, base


def l2_gradient(func, p, M, h=DEFAULT_FD_STEP, cfg=None, n_max=None):
    """Gradient of one functional; retries a tighter step on a branch flip."""
    if not 1e-7 <= h <= 1e-3:
        raise ValueError("fd step outside [1e-7, 1e-3]")
    grads, _ = _stencil_gradients(p, [func], M, h, cfg, n_max)
    g = grads[func]
    if g.anti_residual > 0.05 * _grad_scale(g):
        grads, _ = _stencil_gradients(p, [func], M, h / 10, cfg, n_max)
        g = grads[func]
        if g.anti_residual > 0.05 * _grad_scale(g):
            raise BranchFlip(
                f"functional {func} jumped a branch inside the stencil "
                f"(anti-holomorphic residual {g.anti_residual:.2e})"
            )
    return g


def _grad_scale(g):
    mags = [abs(v) for v in g.g1.values()] + [abs(v) for v in g.g2.values()]
    return max(max(mags), 1e-6)


def bracket_from_gradients(gF, gG):
    """{F, G} by the Parseval pairing of two gradient vectors."""
    acc = 0j
    for k, v in gF.g1.items():
        acc += v * gG.g2.get(-k, 0j)
    for k, v in gF.g2.items():
        acc -= v * gG.g1.get(-k, 0j)
    return -1j * acc


def poisson_bracket(F, G, p, M, h=DEFAULT_FD_STEP, cfg=None, n_max=None):
    grads, _ = _stencil_gradients(p, [F, G], M, h, cfg, n_max)
    return bracket_from_gradients(grads[F], grads[G])


def canonical_suite(p, S, M=8, h=DEFAULT_FD_STEP, cfg=None, n_max=None):
    """Bracket tables over {x_n, y_n} and {theta_n, I_n} for n in S."""
    if len(S) > 5:
        raise ValueError("canonical suite is quadratic in |S|; keep |S| <= 5")
    n_max = n_max or max(8, M + 2)
    ws0 = Workspace.build(p, n_max, cfg)
    cat = ws0.cat

    skipped = []
    xy_specs, ti_specs = [], []
    for n in S:
        collapsed = abs(n) > cat.R and abs(cat.gamma(n)) < 1e-8
        if collapsed:
            skipped.append(("CollapsedGap", n))
            continue
        xy_specs += [("x", n), ("y", n)]
        ti_specs += [("theta", n), ("I", n)]

    specs = xy_specs + ti_specs
    grads, _ = _stencil_gradients(p, specs, M, h, cfg, n_max)

    values = {}
    worst = 0.0
    for i, a in enumerate(specs):
        for b in specs[i:]:
            val = bracket_from_gradients(grads[a], grads[b])
            values[(a, b)] = val
            target = 0.0
            if a[0] == "x" and b[0] == "y" and a[1] == b[1]:
                target = -1.0
            if a[0] == "theta" and b[0] == "I" and a[1] == b[1]:
                target = 1.0
            if {a[0], b[0]} <= {"x", "y"} or {a[0], b[0]} <= {"theta", "I"}:
                worst = max(worst, abs(val - target))
    return BracketReport(values=values, max_deviation=worst, fd_step=h, M=M,
                         skipped=skipped)


def gradient_asymptotics_suite(p, ns, M=None, h=DEFAULT_FD_STEP, cfg=None):
    """Defect norms of the gradients of z_n+-, x_n, y_n against the Fourier frame.

    At a finite-gap focusing potential, d(z_n+)/dc2_k -> -2 delta_nk,
    d(z_n-)/dc1_k -> -2 delta_{-n,k}, d(x_n)/dc2_n = d(x_n)/dc1_{-n} -> -1/sqrt2;
    defects must decay along the index ladder.
    """
    M = M or (max(ns) + 2)
    report = {}
    specs = []
    for n in ns:
        specs += [("x", n), ("y", n)]
    grads, _ = _stencil_gradients(p, specs, M, h, cfg, n_max=max(8, max(ns) + 2))
    for n in ns:
        gx, gy = grads[("x", n)], grads[("y", n)]
        dx = 0.0
        dy = 0.0
        for k in gx.g1:
            tx1 = -1 / np.sqrt(2) if k == -n else 0.0
            tx2 = -1 / np.sqrt(2) if k == n else 0.0
            ty1 = -1 / (np.sqrt(2) * 1j) * (-1.0) if k == -n else 0.0
            ty2 = -1 / (np.sqrt(2) * 1j) if k == n else 0.0
            dx += abs(gx.g1[k] - tx1) ** 2 + abs(gx.g2[k] - tx2) ** 2
            dy += abs(gy.g1[k] - ty1) ** 2 + abs(gy.g2[k] - ty2) ** 2
        report[n] = {"x_defect": float(np.sqrt(dx)), "y_defect": float(np.sqrt(dy))}
    return report


def nls_gradient_exact(p, M):
    """Analytic gradient of H_NLS: д1 H = -phi2'' + 2 phi1 phi2^2 and symmetric."""

    def second_derivative_coeff(coeffs, k):
        return -(2 * np.pi * k) ** 2 * coeffs.get(k, 0j)

    m1 = {k: c1 for k, (c1, _) in p.modes.items()}
    m2 = {k: c2 for k, (_, c2) in p.modes.items()}

    def conv(a, b):
        out = {}
        for ka, va in a.items():
            for kb, vb in b.items():
                out[ka + kb] = out.get(ka + kb, 0j) + va * vb
        return out

    sq2 = conv(m2, m2)
    sq1 = conv(m1, m1)
    cross12 = conv(m1, sq2)   # phi1 phi2^2
    cross21 = conv(m2, sq1)   # phi1^2 phi2

    g1, g2 = {}, {}
    for k in range(-M, M + 1):
        # dH/dc1_k = fourier coefficient of д1H at -k under the pairing
        g1[k] = -second_derivative_coeff(m2, -k) + 2 * cross12.get(-k, 0j)
        g2[k] = -second_derivative_coeff(m1, -k) + 2 * cross21.get(-k, 0j)
    return GradientVector(M=M, g1=g1, g2=g2)
