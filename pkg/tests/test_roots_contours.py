import copy

import numpy as np
import pytest

from zsb import potential as pot
from zsb.errors import ContourCollision, OnCut
from zsb.monodromy import scalars_batch
from zsb.roots_contours import (
    Circle,
    RootEvaluator,
    Stadium,
    build_cut_contour_system,
    contour_quadrature,
    standard_root,
    star_root_sign,
)


def test_contour_winding_integrals():
    st = Stadium(-0.4j, 0.4j, 0.3)
    val = contour_quadrature(st, lambda z: 1.0 / (z - 0.05j), 256)
    assert abs(val / (2j * np.pi) - 1.0) < 1e-12
    ci = Circle(np.pi, np.pi / 4)
    val = contour_quadrature(ci, lambda z: 1.0 / (z - np.pi - 0.1), 128)
    assert abs(val / (2j * np.pi) - 1.0) < 1e-12


def test_zero_system_geometry(zero_ws):
    sys = zero_ws.sys
    for n in zero_ws.cat.indices():
        a, b = sys.cuts[n]
        assert a == b  # degenerate cuts at the double points
        assert isinstance(sys.contours[n], (Circle, Stadium))


def test_plane_wave_geometry(pw04_ws):
    sys = pw04_ws.sys
    a, b = sys.cuts[0]
    assert abs(a + 0.4j) < 1e-8 and abs(b - 0.4j) < 1e-8
    assert isinstance(sys.contours[0], Stadium)
    assert sys.contours[0].width == pytest.approx(0.3)
    assert isinstance(sys.contours[1], Circle)


def test_contour_collision_detected(pw04_ws):
    cat = copy.deepcopy(pw04_ws.cat)
    # drag the pair at disk 1 next to the pair at disk 2
    cat.lam_plus[1] = cat.lam_plus[2] - 0.01
    cat.lam_minus[1] = cat.lam_minus[2] - 0.01
    cat.R = 2  # force stadium contours around the colliding cuts
    with pytest.raises(ContourCollision):
        build_cut_contour_system(cat)


def test_standard_root_collapsed_gap(pw04_ws):
    sys = pw04_ws.sys
    tau = pw04_ws.cat.tau(3)
    for lam in (1.0, 2.5 + 1j):
        assert standard_root(sys, 3, lam) == tau - lam


def test_standard_root_values(pw04_ws):
    sys = pw04_ws.sys
    w = standard_root(sys, 0, 1.0)
    assert abs(w + np.sqrt(1.16)) < 1e-10
    w = standard_root(sys, 0, 1e6)
    assert abs(w / (-1e6) - 1.0) < 1e-6
    # algebraic identity, also near the cut where the branch is tracked
    for lam in (0.05 + 0.1j, 0.3j + 0.01, 2.0 - 1.5j):
        w = standard_root(sys, 0, lam)
        assert abs(w * w - (0.4j - lam) * (-0.4j - lam)) < 1e-12
    with pytest.raises(OnCut):
        standard_root(sys, 0, 0.2j)


def test_canonical_root_zero_potential(zero_ws):
    ev = zero_ws.roots
    for lam in (np.pi / 2, 1.3 + 0.4j, -2.2 + 0.1j):
        val = ev.canonical_root(np.array([lam], dtype=complex))[0]
        assert abs(val + 2j * np.sin(lam)) < 1e-10


def test_canonical_root_squares_to_chi_p(pw04_ws, twomode_ws):
    for ws in (pw04_ws, twomode_ws):
        z, _ = ws.sys.contours[3].points(64)
        val = ws.roots.canonical_root(z)
        _, _, _, chi, _ = scalars_batch(ws.p, z, ws.cfg)
        assert np.max(np.abs(val * val / chi - 1.0)) < 1e-8


def test_canonical_root_conjugation(twomode_ws):
    lams = np.array([1.0 + 0.9j, -2.0 + 0.5j, 4.0 + 0.2j])
    ev = twomode_ws.roots
    a = ev.canonical_root(lams)
    b = ev.canonical_root(np.conjugate(lams))
    assert np.max(np.abs(np.conjugate(a) + b)) < 1e-8


def test_canonical_root_tail_stability(twomode_ws):
    # hybrid evaluation: doubling K_tail only touches the branch guide
    sys2 = build_cut_contour_system(twomode_ws.cat,
                                    k_tail=2 * twomode_ws.sys.K_tail)
    ev2 = RootEvaluator(twomode_ws.p, twomode_ws.cat, sys2, twomode_ws.cfg)
    z, _ = twomode_ws.sys.contours[4].points(32)
    a = twomode_ws.roots.canonical_root(z)
    b = ev2.canonical_root(z)
    assert np.max(np.abs(a - b)) < 1e-9


def test_star_sign_values(zero_ws, pw04_ws, onegap_ws):
    # mu at the double points: epsilon = 0
    assert star_root_sign(pw04_ws.p, pw04_ws.cat, pw04_ws.sys, 1, pw04_ws.cfg) == 0
    assert star_root_sign(zero_ws.p, zero_ws.cat, zero_ws.sys, 2, zero_ws.cfg) == 0
    # open-gap potential with mu off the band edges of some other disk
    ws = onegap_ws
    eps = {n: ws.roots.star_sign(n, on_cut="displace")
           for n in ws.cat.indices() if abs(n) > ws.cat.R}
    assert all(e in (-1, 0, 1) for e in eps.values())


def test_guide_accuracy(twomode_ws):
    z, _ = twomode_ws.sys.contours[2].points(32)
    g = twomode_ws.roots.guide(z)
    c = twomode_ws.roots.canonical_root(z)
    assert np.max(np.abs(g / c - 1.0)) < 1e-4
