import numpy as np
import pytest

from zsb import potential as pot
from zsb.verify import (
    bracket_from_gradients,
    canonical_suite,
    gradient_asymptotics_suite,
    l2_gradient,
    nls_gradient_exact,
    poisson_bracket,
    _stencil_gradients,
)


def _gdict_close(g, h, tol):
    worst = 0.0
    for k in g.g1:
        worst = max(worst, abs(g.g1[k] - h.g1[k]), abs(g.g2[k] - h.g2[k]))
    return worst < tol


def test_hamiltonian_gradient_matches_analytic(pw04):
    g = l2_gradient(("H",), pw04, M=2, h=1e-5)
    exact = nls_gradient_exact(pw04, 2)
    assert _gdict_close(g, exact, 1e-6)


def test_hamiltonian_gradient_generic_modes():
    p = pot.from_u([(1, 0.1), (2, 0.05j)])
    g = l2_gradient(("H",), p, M=3, h=1e-5)
    exact = nls_gradient_exact(p, 3)
    assert _gdict_close(g, exact, 1e-6)


def test_delta_gradient_richardson_consistency(zero_pot):
    lam0 = 0.7
    g1 = l2_gradient(("Delta", lam0), zero_pot, M=2, h=1e-4)
    g2 = l2_gradient(("Delta", lam0), zero_pot, M=2, h=5e-5)
    # second-order stencil: Richardson pair agrees to O(h^2) ~ 1e-8 here
    rich = {k: (4 * g2.g1[k] - g1.g1[k]) / 3 for k in g2.g1}
    g3 = l2_gradient(("Delta", lam0), zero_pot, M=2, h=1e-5)
    worst = max(abs(rich[k] - g3.g1[k]) for k in rich)
    assert worst < 1e-7


def test_bracket_antisymmetry_and_commuting_discriminants():
    p = pot.from_u([(1, 0.09), (2, 0.05)])
    specs = [("Delta", 0.6), ("Delta", 1.9 + 0.3j)]
    grads, _ = _stencil_gradients(p, specs, M=3, h=1e-5)
    br = bracket_from_gradients(grads[specs[0]], grads[specs[1]])
    rb = bracket_from_gradients(grads[specs[1]], grads[specs[0]])
    assert abs(br + rb) < 1e-12          # antisymmetry of the pairing
    assert abs(br) < 1e-5                # discriminants commute


def test_action_action_bracket(twomode_pot):
    val = poisson_bracket(("I", -1), ("I", -2), twomode_pot, M=4, h=1e-5)
    assert abs(val) < 1e-5


def test_action_discriminant_bracket(onegap_pot):
    val = poisson_bracket(("I", -1), ("Delta", 0.9), onegap_pot, M=3, h=1e-5)
    assert abs(val) < 1e-5


def test_canonical_suite_one_gap(onegap_pot):
    rep = canonical_suite(onegap_pot, [-1], M=4, h=1e-5, n_max=8)
    assert rep.max_deviation < 5e-3
    xy = rep.values[(("x", -1), ("y", -1))]
    assert abs(xy + 1.0) < 5e-3
    ti = rep.values[(("theta", -1), ("I", -1))]
    assert abs(ti - 1.0) < 5e-3


def test_canonical_suite_skips_collapsed(zero_pot):
    rep = canonical_suite(zero_pot, [2], M=2, h=1e-5)
    assert rep.skipped and rep.skipped[0][0] == "CollapsedGap"


def test_gradient_asymptotics_at_zero(zero_pot):
    rep = gradient_asymptotics_suite(zero_pot, [2, 3, 4], M=5, h=1e-5)
    for n in (2, 3, 4):
        assert rep[n]["x_defect"] < 2e-4
        assert rep[n]["y_defect"] < 2e-4
