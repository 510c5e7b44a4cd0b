"""Fundamental solution of the Zakharov-Shabat system and the discriminant.

The system L(phi) f = lambda f is equivalent to f' = A(x, lambda) f with

    A = [[-i*lambda, i*phi_1], [-i*phi_2, i*lambda]],

integrated over x in [0, 1] by composing exact exponentials of the
midpoint-frozen coefficient matrix.  Since A^2 = (phi_1*phi_2 - lambda^2) Id,
each local step is

    exp(h A) = cosh(h mu) Id + (sinh(h mu)/mu) A,    mu^2 = phi_1 phi_2 - lambda^2,

which is even in mu (branch-free), exactly unimodular and exact for constant
potentials.  The lambda-derivative of each step is available in closed form,
so dM/dlambda is accumulated by the product rule to the same accuracy.

All heavy entry points are vectorized over arrays of lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFinite
from .potential import sample_grid

DEFAULT_STEPS = 512


@dataclass(frozen=True)
class IntegratorConfig:
    steps: int = DEFAULT_STEPS
    richardson: bool = False

    def __post_init__(self):
        if self.steps < 16:
            raise ValueError("integrator needs at least 16 steps")


DEFAULT_CFG = IntegratorConfig()


@dataclass(frozen=True)
class MonodromyBundle:
    """M(1, lambda), its lambda-derivative and the derived scalars."""

    lam: complex
    M: np.ndarray
    dM_dlambda: np.ndarray
    delta: complex          # trace m1 + m4
    delta_dot: complex
    anti: complex           # m2 + m3, the anti-discriminant delta(lambda)
    chi_p: complex          # delta^2 - 4
    chi_D: complex          # (m4 + m3 - m2 - m1) / (2i)


def _cosh_sinhc(t):
    """cosh(t) and sinh(t)/t with a series fallback near t = 0."""
    c = np.cosh(t)
    small = np.abs(t) < 1e-4
    t_safe = np.where(small, 1.0, t)
    s = np.sinh(t_safe) / t_safe
    t2 = t * t
    s = np.where(small, 1.0 + t2 / 6.0 + t2 * t2 / 120.0, s)
    return c, s


def _g_factor(t):
    """(t*cosh(t) - sinh(t)) / t^3 with series fallback near t = 0."""
    small = np.abs(t) < 1e-3
    t_safe = np.where(small, 1.0, t)
    g = (t_safe * np.cosh(t_safe) - np.sinh(t_safe)) / t_safe**3
    t2 = t * t
    g = np.where(small, 1.0 / 3.0 + t2 / 30.0 + t2 * t2 / 840.0, g)
    return g


def _propagate(p, lams, steps):
    """Monodromy M(1, .) and dM/dlambda for an array of lambda values."""
    lams = np.asarray(lams, dtype=complex)
    L = lams.shape[0]
    f1, f2 = sample_grid(p, max(steps, 2 * p.max_mode + 1))
    P = f1.shape[0]
    h = 1.0 / P

    if np.any(np.abs(lams.imag) > 600.0):
        raise NonFinite("monodromy overflow; |Im lambda| too large for this precision")

    m1 = np.ones(L, dtype=complex)
    m2 = np.zeros(L, dtype=complex)
    m3 = np.zeros(L, dtype=complex)
    m4 = np.ones(L, dtype=complex)
    q1 = np.zeros(L, dtype=complex)
    q2 = np.zeros(L, dtype=complex)
    q3 = np.zeros(L, dtype=complex)
    q4 = np.zeros(L, dtype=complex)

    lam2 = lams * lams
    neg_ilam = -1j * lams
    chunk = max(1, min(P, 65536 // max(L, 1)))

    for j0 in range(0, P, chunk):
        j1 = min(j0 + chunk, P)
        # local exponentials for this block of steps: arrays of shape (c, L)
        mu2 = (f1[j0:j1] * f2[j0:j1])[:, None] - lam2[None, :]
        mu = np.sqrt(mu2)           # branch irrelevant: all factors even in mu
        t = h * mu
        c, sh = _cosh_sinhc(t)
        s = h * sh                  # sinh(h mu)/mu
        g = h**3 * _g_factor(t)     # (h mu cosh - sinh)/mu^3

        a11 = neg_ilam[None, :]
        a12 = (1j * f1[j0:j1])[:, None]
        a21 = (-1j * f2[j0:j1])[:, None]

        e11 = c + s * a11
        e12 = s * a12
        e21 = s * a21
        e22 = c - s * a11

        hs = -lams[None, :] * h * s
        lg = -lams[None, :] * g
        d11 = hs + lg * a11 - 1j * s
        d12 = lg * a12
        d21 = lg * a21
        d22 = hs - lg * a11 + 1j * s

        for j in range(j1 - j0):
            E11, E12, E21, E22 = e11[j], e12[j], e21[j], e22[j]
            D11, D12, D21, D22 = d11[j], d12[j], d21[j], d22[j]
            # dM <- dE M + E dM
            q1, q2, q3, q4 = (
                D11 * m1 + D12 * m3 + E11 * q1 + E12 * q3,
                D11 * m2 + D12 * m4 + E11 * q2 + E12 * q4,
                D21 * m1 + D22 * m3 + E21 * q1 + E22 * q3,
                D21 * m2 + D22 * m4 + E21 * q2 + E22 * q4,
            )
            m1, m2, m3, m4 = (
                E11 * m1 + E12 * m3,
                E11 * m2 + E12 * m4,
                E21 * m1 + E22 * m3,
                E21 * m2 + E22 * m4,
            )

    M = np.empty((L, 2, 2), dtype=complex)
    dM = np.empty((L, 2, 2), dtype=complex)
    M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1] = m1, m2, m3, m4
    dM[:, 0, 0], dM[:, 0, 1], dM[:, 1, 0], dM[:, 1, 1] = q1, q2, q3, q4
    if not np.all(np.isfinite(M)) or not np.all(np.isfinite(dM)):
        raise NonFinite("monodromy overflow; |Im lambda| too large for this precision")
    return M, dM


def monodromy_batch(p, lams, cfg=DEFAULT_CFG):
    """Batched M(1, lambda) and dM/dlambda; Richardson-extrapolated on request."""
    M, dM = _propagate(p, lams, cfg.steps)
    if cfg.richardson:
        M2, dM2 = _propagate(p, lams, 2 * cfg.steps)
        M = (4.0 * M2 - M) / 3.0
        dM = (4.0 * dM2 - dM) / 3.0
    return M, dM


def delta_batch(p, lams, cfg=DEFAULT_CFG):
    """Delta and Delta-dot at an array of lambda."""
    M, dM = monodromy_batch(p, lams, cfg)
    return M[:, 0, 0] + M[:, 1, 1], dM[:, 0, 0] + dM[:, 1, 1]


def scalars_batch(p, lams, cfg=DEFAULT_CFG):
    """(delta, delta_dot, anti, chi_p, chi_D) arrays at an array of lambda."""
    M, dM = monodromy_batch(p, lams, cfg)
    delta = M[:, 0, 0] + M[:, 1, 1]
    ddot = dM[:, 0, 0] + dM[:, 1, 1]
    anti = M[:, 0, 1] + M[:, 1, 0]
    chi_p = delta * delta - 4.0
    chi_d = (M[:, 1, 1] + M[:, 1, 0] - M[:, 0, 1] - M[:, 0, 0]) / 2j
    return delta, ddot, anti, chi_p, chi_d


def chi_d_batch(p, lams, cfg=DEFAULT_CFG):
    """chi_D and its lambda-derivative at an array of lambda."""
    M, dM = monodromy_batch(p, lams, cfg)
    chi_d = (M[:, 1, 1] + M[:, 1, 0] - M[:, 0, 1] - M[:, 0, 0]) / 2j
    chi_d_dot = (dM[:, 1, 1] + dM[:, 1, 0] - dM[:, 0, 1] - dM[:, 0, 0]) / 2j
    return chi_d, chi_d_dot


def _bundle_from_arrays(lam, M, dM):
    delta = M[0, 0] + M[1, 1]
    return MonodromyBundle(
        lam=complex(lam),
        M=M,
        dM_dlambda=dM,
        delta=complex(delta),
        delta_dot=complex(dM[0, 0] + dM[1, 1]),
        anti=complex(M[0, 1] + M[1, 0]),
        chi_p=complex(delta * delta - 4.0),
        chi_D=complex((M[1, 1] + M[1, 0] - M[0, 1] - M[0, 0]) / 2j),
    )


def fundamental_matrix(p, lam, cfg=DEFAULT_CFG):
    """MonodromyBundle at a single spectral parameter."""
    M, dM = monodromy_batch(p, np.array([lam], dtype=complex), cfg)
    return _bundle_from_arrays(lam, M[0], dM[0])


def discriminant_on_segment(p, lam_start, lam_end, count, cfg=DEFAULT_CFG):
    """Bundles at `count` equispaced lambda on the segment [lam_start, lam_end]."""
    if count < 2:
        raise ValueError("count must be at least 2")
    lams = np.linspace(complex(lam_start), complex(lam_end), count)
    M, dM = monodromy_batch(p, lams, cfg)
    return [_bundle_from_arrays(lams[i], M[i], dM[i]) for i in range(count)]
