import json

import numpy as np
import pytest

from zsb import potential as pot
from zsb.errors import DuplicateMode, GridTooCoarse


def test_empty_is_zero_focusing():
    p = pot.from_fourier([])
    assert p.is_zero()
    assert p.real_type == pot.FOCUSING


def test_constant_plane_wave_mode():
    c = 0.4
    p = pot.from_fourier([(0, 1j * c, 1j * np.conjugate(c))])
    assert p.real_type == pot.FOCUSING
    f1, f2 = pot.sample_grid(p, 4)
    assert np.allclose(f1, 0.4j) and np.allclose(f2, 0.4j)


def test_single_mode_involution_tags():
    # focusing demands phi2_hat(-1) = -conj(phi1_hat(1)) = +0.1i
    p = pot.from_fourier([(1, 0.1j, 0), (-1, 0, 0.1j)])
    assert p.real_type == pot.FOCUSING
    q = pot.from_fourier([(1, 0.1j, 0), (-1, 0, -0.1j)])
    assert q.real_type == pot.DEFOCUSING
    r = pot.from_fourier([(1, 0.1j, 0), (-1, 0, 0.07j)])
    assert r.real_type == pot.GENERIC


def test_duplicate_mode_rejected():
    with pytest.raises(DuplicateMode):
        pot.from_fourier([(1, 1.0, 0), (1, 2.0, 0)])


def test_plane_wave_product_and_norm():
    c = 0.3 + 0.2j
    p = pot.plane_wave(c)
    assert p.real_type == pot.FOCUSING
    f1, f2 = pot.sample_grid(p, 8)
    assert np.allclose(f1 * f2, -abs(c) ** 2)
    for N in (0, 1, 3):
        assert pot.sobolev_norm(p, N) == pytest.approx(np.sqrt(2) * abs(c), abs=1e-14)
    assert pot.plane_wave(0).is_zero()


def test_sample_grid_values():
    p = pot.from_fourier([(1, 0.1j, 0), (-1, 0, 0.1j)])
    P = 16
    f1, _ = pot.sample_grid(p, P)
    x = (np.arange(P) + 0.5) / P
    assert np.max(np.abs(f1 - 0.1j * np.exp(2j * np.pi * x))) < 1e-14
    with pytest.raises(GridTooCoarse):
        pot.sample_grid(p, 2)


def test_sample_grid_matches_analytic_many_modes():
    rng = np.random.default_rng(7)
    triples = [(k, rng.standard_normal() + 1j * rng.standard_normal(),
                rng.standard_normal() + 1j * rng.standard_normal())
               for k in range(-16, 17)]
    p = pot.from_fourier(triples)
    P = 128
    f1, f2 = pot.sample_grid(p, P)
    x = (np.arange(P) + 0.5) / P
    g1 = sum(c1 * np.exp(2j * np.pi * k * x) for k, c1, _ in triples)
    g2 = sum(c2 * np.exp(2j * np.pi * k * x) for k, _, c2 in triples)
    assert np.max(np.abs(f1 - g1)) < 1e-13
    assert np.max(np.abs(f2 - g2)) < 1e-13


def test_hamiltonian_zero_and_plane_wave():
    assert pot.nls_hamiltonian(pot.from_fourier([])) == 0
    c = 0.4
    h = pot.nls_hamiltonian(pot.plane_wave(c))
    assert h == pytest.approx(c ** 4, abs=1e-14)


def test_hamiltonian_against_quadrature_oracle():
    p = pot.from_u([(1, 0.1)])
    # independent oracle: trapezoid quadrature of the defining integral
    P = 2 ** 12
    x = np.arange(P) / P
    f1, f2 = pot.evaluate(p, x)
    d1 = np.gradient(np.concatenate([f1, f1[:1]]), 1.0 / P)[:-1]
    # spectral differentiation is cleaner: differentiate each mode exactly
    d1 = sum(2j * np.pi * k * c1 * np.exp(2j * np.pi * k * x)
             for k, (c1, _) in p.modes.items())
    d2 = sum(2j * np.pi * k * c2 * np.exp(2j * np.pi * k * x)
             for k, (_, c2) in p.modes.items())
    oracle = np.mean(d1 * d2 + f1 ** 2 * f2 ** 2)
    assert abs(pot.nls_hamiltonian(p) - oracle) < 1e-12


def test_hamiltonian_real_on_focusing():
    rng = np.random.default_rng(3)
    for _ in range(4):
        ks = rng.choice(np.arange(-3, 4), size=3, replace=False)
        p = pot.from_u([(int(k), 0.1 * (rng.standard_normal()
                                        + 1j * rng.standard_normal())) for k in ks])
        assert abs(pot.nls_hamiltonian(p).imag) < 1e-12


def test_sobolev_monotone_in_order():
    p = pot.from_u([(1, 0.1), (3, 0.05j)])
    norms = [pot.sobolev_norm(p, N) for N in range(4)]
    assert all(norms[i] < norms[i + 1] for i in range(3))


def test_json_round_trip(tmp_path):
    p = pot.from_u([(1, 0.1 + 0.05j), (2, -0.02j)])
    path = tmp_path / "p.json"
    pot.save(p, path)
    q = pot.load(path)
    assert q.modes == p.modes
    assert q.real_type == p.real_type
    d = json.loads(path.read_text())
    assert set(d) == {"modes", "tag"}
    assert all(set(m) == {"k", "phi1", "phi2"} for m in d["modes"])


def test_translate_and_phase_rotate_preserve_tag():
    p = pot.from_u([(1, 0.1), (2, 0.05j)])
    assert pot.translate(p, 0.3).real_type == pot.FOCUSING
    assert pot.phase_rotate(p, 0.7).real_type == pot.FOCUSING
    # translation moves samples: phi(x + a)
    a = 0.25
    f1, _ = pot.sample_grid(pot.translate(p, a), 32)
    g1, _ = pot.evaluate(p, ((np.arange(32) + 0.5) / 32 + a) % 1.0)
    assert np.max(np.abs(f1 - g1)) < 1e-13
