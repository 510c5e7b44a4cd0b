import numpy as np
import pytest

from zsb import potential as pot
from zsb.errors import ClosedGap, SymmetryViolation
from zsb.monodromy import IntegratorConfig, delta_batch
from zsb.spectrum import (
    build_catalog,
    check_real_type_symmetry,
    completeness_audit,
    locate_periodic_spectrum,
    refine_catalog,
    trace_spectral_band,
)

from conftest import random_focusing


def test_zero_catalog(zero_ws):
    cat = zero_ws.cat
    assert cat.R == 0
    for n in cat.indices():
        assert abs(cat.lam_plus[n] - n * np.pi) < 1e-8
        assert abs(cat.gamma(n)) == 0.0
        assert cat.mult[n] == 2
        assert abs(cat.mu[n] - n * np.pi) < 1e-8
        assert abs(cat.lamdot[n] - n * np.pi) < 1e-8


def test_plane_wave_catalog(pw04_ws):
    cat = pw04_ws.cat
    assert cat.R == 0
    assert abs(cat.gamma(0) - 0.8j) < 1e-8
    assert abs(cat.lam_plus[0] - 0.4j) < 1e-9
    assert abs(cat.mu[0] - 0.4j) < 1e-9
    assert abs(cat.lamdot[0]) < 1e-9
    for n in cat.indices():
        if n == 0:
            continue
        exact = np.sign(n) * np.sqrt(n * n * np.pi ** 2 - 0.16)
        assert abs(cat.lam_plus[n] - exact) < 1e-9
        assert abs(cat.gamma(n)) < 1e-8
        assert abs(cat.mu[n] - exact) < 1e-9
        assert abs(cat.lamdot[n] - exact) < 1e-9


def test_delta_residual_at_roots(twomode_ws):
    cat = twomode_ws.cat
    p = twomode_ws.p
    lams = np.array([cat.lam_plus[n] for n in cat.indices()])
    d, _ = delta_batch(p, lams, twomode_ws.cfg)
    signs = np.array([2.0 * (-1) ** n for n in cat.indices()])
    assert np.max(np.abs(d - signs)) < 1e-9


def test_against_grid_scan_oracle():
    p = pot.from_u([(1, 0.10), (2, 0.06 + 0.03j)])
    cfg = IntegratorConfig(steps=512, richardson=True)
    cat = build_catalog(p, 5, cfg)

    # independent localization: dense complex grid in each disk, pick local
    # minima of |Delta -+ 2| as seeds, polish by Newton
    for n in (-2, -1):
        s = 2.0 * (-1) ** n
        re = np.linspace(n * np.pi - 0.5, n * np.pi + 0.5, 41)
        im = np.linspace(-0.5, 0.5, 41)
        grid = (re[:, None] + 1j * im[None, :]).ravel()
        d, _ = delta_batch(p, grid, cfg)
        vals = np.abs(d - s).reshape(41, 41)
        idx = np.argsort(vals.ravel())[:6]
        found = []
        for i in idx:
            lam = grid[i]
            for _ in range(60):
                dd, ddot = delta_batch(p, np.array([lam]), cfg)
                step = (dd[0] - s) / ddot[0]
                lam = lam - step
                if abs(step) < 1e-13:
                    break
            if not any(abs(lam - f) < 1e-6 for f in found):
                found.append(lam)
        for target in (cat.lam_plus[n], cat.lam_minus[n]):
            assert min(abs(target - f) for f in found) < 1e-8


def test_symmetry_zero_and_plane_wave(zero_ws, pw04_ws):
    assert check_real_type_symmetry(zero_ws.cat)["max_violation"] < 1e-12
    assert check_real_type_symmetry(pw04_ws.cat)["max_violation"] < 1e-10


def test_symmetry_random_focusing():
    rng = np.random.default_rng(23)
    p = random_focusing(rng)
    cat = build_catalog(p, 6, IntegratorConfig(steps=512, richardson=True))
    rep = check_real_type_symmetry(cat)
    assert rep["max_violation"] < 1e-8


def test_symmetry_violation_detected(pw04_ws):
    import copy

    cat = copy.deepcopy(pw04_ws.cat)
    cat.lam_plus[0] = 0.1 + 0.4j  # break the conjugate pairing
    with pytest.raises(SymmetryViolation):
        check_real_type_symmetry(cat)


def test_critical_point_gap_asymptotics(twomode_ws):
    cat = twomode_ws.cat
    for n in cat.indices():
        if abs(n) <= cat.R:
            continue
        gap = abs(cat.gamma(n))
        if gap > 1e-8:
            assert abs(cat.lamdot[n] - cat.tau(n)) <= 5.0 * gap ** 2 + 1e-9


def test_completeness_audit(twomode_ws):
    w, expected = completeness_audit(twomode_ws.p, twomode_ws.cat, twomode_ws.cfg)
    assert w == expected


def test_decay_audit_small_amplitude():
    # finite-gap tails sit at n pi only up to the q = int(phi1 phi2) shift,
    # so the strict partial-sum audit needs a small potential
    p = pot.from_u([(1, 0.005)])
    cat = build_catalog(p, 16, IntegratorConfig(steps=512, richardson=True))
    devs = np.array([abs(cat.lam_plus[n] - n * np.pi) ** 2 for n in cat.indices()])
    order = np.argsort([abs(n) for n in cat.indices()])
    seq = devs[order]
    quarter = len(seq) // 4
    assert np.sum(seq[-quarter:]) < 1e-12


def test_refine_matches_build(twomode_ws):
    cat = refine_catalog(twomode_ws.p, twomode_ws.cat, twomode_ws.cfg)
    for n in cat.indices():
        assert abs(cat.lam_plus[n] - twomode_ws.cat.lam_plus[n]) < 1e-9
        assert abs(cat.mu[n] - twomode_ws.cat.mu[n]) < 1e-9


def test_band_tracing_open_gap(onegap_ws):
    p, cat = onegap_ws.p, onegap_ws.cat
    band = trace_spectral_band(p, cat, -1, onegap_ws.cfg)
    lam_m, lam_p = band.endpoints
    top = [complex(u, v) for u, v in band.samples if v == max(s[1] for s in band.samples)]
    bot = [complex(u, v) for u, v in band.samples if v == min(s[1] for s in band.samples)]
    assert abs(top[0] - lam_p) < 1e-8
    assert abs(bot[0] - lam_m) < 1e-8
    interior = [d for (u, v), d in zip(band.samples, band.delta_values)
                if abs(v) < 0.999 * lam_p.imag]
    for d in interior:
        assert abs(d.imag) < 1e-9
        assert -2 < d.real < 2
    # symmetry a(-v) = a(v)
    us = {}
    for u, v in band.samples:
        us.setdefault(round(abs(v), 12), []).append(u)
    for v, pair in us.items():
        if len(pair) == 2:
            assert abs(pair[0] - pair[1]) < 1e-8


def test_band_tracing_closed_gap(zero_ws):
    with pytest.raises(ClosedGap):
        trace_spectral_band(zero_ws.p, zero_ws.cat, 3, zero_ws.cfg)


def test_lowpair_cluster(lowpair_ws):
    cat = lowpair_ws.cat
    assert cat.R == 1
    assert len(cat.cluster) == 6
    assert check_real_type_symmetry(cat)["max_violation"] < 1e-8
    for n in (-1, 0, 1):
        assert cat.lam_plus[n].imag > 0
        assert abs(cat.lam_minus[n] - np.conjugate(cat.lam_plus[n])) < 1e-8
