import numpy as np
import pytest

from zsb import potential as pot
from zsb.differentials import (
    b_period,
    evaluate_zeta,
    solve_normalized_differential,
)
from zsb.errors import NoLowModes
from zsb.monodromy import scalars_batch


def _a_period(ws, d, m, nodes=512, hybrid=False):
    z, dz = ws.sys.contours[m].points(nodes)
    if hybrid:
        vals = evaluate_zeta(d, ws.roots, z) / ws.roots.sqrt_chi_p(z)
    else:
        vals = ws.roots.w_product_ratio(d.sigma, d.n, z)
    return np.sum(vals * dz) / (2 * np.pi)


def test_zero_potential_differential(zero_ws):
    ws = zero_ws
    d = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, 1, ws.cfg)
    assert d.residual < 1e-12
    for k in d.K_active:
        assert abs(d.sigma[k] - k * np.pi) < 1e-9
    # self-check of the resummed zeta against the a-period normalization,
    # evaluated with the independent hybrid canonical root
    assert abs(_a_period(ws, d, 1, hybrid=True) - 1.0) < 1e-10
    assert abs(_a_period(ws, d, 0, hybrid=True)) < 1e-10
    # closed form at lambda = pi: all factors cancel, zeta_1(pi) = 2
    assert abs(evaluate_zeta(d, ws.roots, np.pi) - 2.0) < 1e-10


def test_plane_wave_single_unknown(pw04_ws):
    ws = pw04_ws
    d = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, 2, ws.cfg)
    assert d.K_active == [0]
    sig = d.sigma[0]
    assert abs(sig) < 0.4
    assert d.residual < 1e-10

    # independent oracle: bisection on the real axis for the root of the
    # a-period over Gamma_0 as a function of sigma
    def aper(x):
        sigma = {0: complex(x)}
        z, dz = ws.sys.contours[0].points(256)
        vals = ws.roots.w_product_ratio(sigma, 2, z)
        return (np.sum(vals * dz) / (2 * np.pi)).real

    lo, hi = -0.3, 0.3
    flo = aper(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = aper(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    assert abs(0.5 * (lo + hi) - sig.real) < 1e-9


def test_a_period_identity(twomode_ws):
    ws = twomode_ws
    for n in (-1, 3):
        d = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, n, ws.cfg)
        for m in set(d.K_active) | {n}:
            target = 1.0 if m == n else 0.0
            assert abs(_a_period(ws, d, m) - target) < 1e-8
        inactive = [m for m in ws.cat.indices()
                    if m != n and m not in d.K_active][:8]
        for m in inactive:
            assert abs(_a_period(ws, d, m)) < 1e-7


def test_sigma_location_and_closeness(twomode_ws):
    ws = twomode_ws
    d = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, 2, ws.cfg)
    for k in d.K_active:
        if abs(k) > ws.cat.R:
            assert abs(d.sigma[k] - k * np.pi) < np.pi / 6
            gap = abs(ws.cat.gamma(k))
            assert abs(d.sigma[k] - ws.cat.tau(k)) <= 10 * gap ** 2 + 1e-8


def test_zeta_conjugation_symmetry(twomode_ws):
    ws = twomode_ws
    d = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, -1, ws.cfg)
    lams = np.array([0.5 + 0.5j, -3.0 + 0.2j, 2.0 - 1.0j])
    a = evaluate_zeta(d, ws.roots, lams)
    b = evaluate_zeta(d, ws.roots, np.conjugate(lams))
    assert np.max(np.abs(np.conjugate(b) - a)) < 1e-8


def test_zeta_vanishes_at_sigma(twomode_ws):
    ws = twomode_ws
    d = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, -1, ws.cfg)
    for k in d.K_active:
        assert abs(evaluate_zeta(d, ws.roots, d.sigma[k])) < 1e-10


def test_b_periods_low_pair(lowpair_ws):
    ws = lowpair_ws
    with pytest.raises(NoLowModes):
        d0 = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, 0, ws.cfg)
        b_period(ws.p, ws.cat, ws.sys, ws.roots, d0, 0)
    vals = {}
    for n in (0, 2, 3):
        d = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, n, ws.cfg)
        for k in (1, -1):
            pnk = b_period(ws.p, ws.cat, ws.sys, ws.roots, d, k)
            assert abs(pnk.real) < 1e-7
            vals[(n, k)] = pnk
    # amplitude of the b-periods decays in n
    assert abs(vals[(3, 1)]) < abs(vals[(2, 1)]) < abs(vals[(0, 1)])


def test_no_low_modes_plane_wave(pw04_ws):
    ws = pw04_ws
    d = solve_normalized_differential(ws.p, ws.cat, ws.sys, ws.roots, 1, ws.cfg)
    with pytest.raises(NoLowModes):
        b_period(ws.p, ws.cat, ws.sys, ws.roots, d, 1)
