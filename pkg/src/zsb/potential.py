"""Potentials phi = (phi_1, phi_2) on the unit torus, stored spectrally.

A potential is a pair of trigonometric polynomials

    phi_j(x) = sum_k c_j(k) exp(2*pi*i*k*x),   j = 1, 2,

held as a finite map k -> (c_1(k), c_2(k)).  All derived quantities that
admit a Parseval form (Sobolev norms, the NLS Hamiltonian, the mean of
phi_1*phi_2) are computed exactly on the coefficients; grid sampling is
derived, never primary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateMode, GridTooCoarse, IoError

INVOLUTION_TOL = 1e-12

FOCUSING = "focusing"
DEFOCUSING = "defocusing"
GENERIC = "generic"


@dataclass(frozen=True)
class Potential:
    """Finitely supported Fourier data of phi = (phi_1, phi_2)."""

    modes: dict
    real_type: str = GENERIC
    grid_size: int = 0

    @property
    def max_mode(self):
        return max((abs(k) for k in self.modes), default=0)

    def coeff(self, k):
        return self.modes.get(k, (0j, 0j))

    def is_zero(self):
        return all(abs(c1) == 0 and abs(c2) == 0 for c1, c2 in self.modes.values())

    def conjugate_flip(self, j, k):
        """conj(phi_j hat(-k)), the quantity the involution identities compare."""
        c1, c2 = self.coeff(-k)
        return np.conjugate(c1 if j == 1 else c2)


def _infer_real_type(modes):
    ks = set(modes) | {-k for k in modes}
    foc = defoc = True
    for k in ks:
        c1, c2 = modes.get(k, (0j, 0j))
        d1, _ = modes.get(-k, (0j, 0j))
        target = np.conjugate(d1)
        if abs(c2 + target) > INVOLUTION_TOL:
            foc = False
        if abs(c2 - target) > INVOLUTION_TOL:
            defoc = False
    if foc:
        return FOCUSING
    if defoc:
        return DEFOCUSING
    return GENERIC


def from_fourier(mode_list):
    """Build a Potential from (k, c1, c2) triples; tag inferred."""
    modes = {}
    for k, c1, c2 in mode_list:
        k = int(k)
        if k in modes:
            raise DuplicateMode(f"mode {k} given twice")
        modes[k] = (complex(c1), complex(c2))
    modes = {k: v for k, v in sorted(modes.items()) if v != (0j, 0j)}
    tag = _infer_real_type(modes)
    kmax = max((abs(k) for k in modes), default=0)
    return Potential(modes=modes, real_type=tag, grid_size=2 * kmax + 1)


def plane_wave(c):
    """Constant potential phi = i*(c, conj(c)); the basic focusing family."""
    c = complex(c)
    if c == 0:
        return from_fourier([])
    return from_fourier([(0, 1j * c, 1j * np.conjugate(c))])


def from_u(u_modes):
    """Focusing potential from Fourier modes of u, via phi = i*(u, conj(u))."""
    triples = {}
    for k, uk in u_modes:
        c1, c2 = triples.get(k, (0j, 0j))
        triples[k] = (c1 + 1j * complex(uk), c2)
    for k, uk in u_modes:
        c1, c2 = triples.get(-k, (0j, 0j))
        triples[-k] = (c1, c2 + 1j * np.conjugate(complex(uk)))
    return from_fourier([(k, c1, c2) for k, (c1, c2) in triples.items()])


def sample_grid(p, P):
    """Values of phi_1, phi_2 at the midpoints x_j = (j + 1/2)/P."""
    if P < 2 * p.max_mode + 1:
        raise GridTooCoarse(f"P={P} below Nyquist for max mode {p.max_mode}")
    x = (np.arange(P) + 0.5) / P
    f1 = np.zeros(P, dtype=complex)
    f2 = np.zeros(P, dtype=complex)
    for k, (c1, c2) in p.modes.items():
        e = np.exp(2j * np.pi * k * x)
        f1 += c1 * e
        f2 += c2 * e
    return f1, f2


def evaluate(p, x):
    """Pointwise (phi_1, phi_2) at arbitrary x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    f1 = np.zeros_like(x, dtype=complex)
    f2 = np.zeros_like(x, dtype=complex)
    for k, (c1, c2) in p.modes.items():
        e = np.exp(2j * np.pi * k * x)
        f1 += c1 * e
        f2 += c2 * e
    return f1, f2


def sobolev_norm(p, N):
    """||phi||_N = (sum_k (1+k^2)^N (|c1|^2+|c2|^2))^(1/2), exact."""
    total = 0.0
    for k, (c1, c2) in p.modes.items():
        total += (1.0 + k * k) ** N * (abs(c1) ** 2 + abs(c2) ** 2)
    return float(np.sqrt(total))


def _convolve(a, b):
    """Coefficient map of the pointwise product of two trig polynomials."""
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            out[ka + kb] = out.get(ka + kb, 0j) + va * vb
    return out


def phi_product_mean(p):
    """int_0^1 phi_1*phi_2 dx, exact via Parseval."""
    return sum(c1 * p.coeff(-k)[1] for k, (c1, _) in p.modes.items())


def nls_hamiltonian(p):
    """H = int_0^1 (phi_1' phi_2' + phi_1^2 phi_2^2) dx, exact on coefficients."""
    h = 0j
    for k, (c1, _) in p.modes.items():
        c2m = p.coeff(-k)[1]
        h += (2 * np.pi * k) ** 2 * c1 * c2m
    m1 = {k: c1 for k, (c1, _) in p.modes.items()}
    m2 = {k: c2 for k, (_, c2) in p.modes.items()}
    sq1 = _convolve(m1, m1)
    sq2 = _convolve(m2, m2)
    for k, v in sq1.items():
        h += v * sq2.get(-k, 0j)
    return complex(h)


def translate(p, a):
    """phi(x) -> phi(x + a): multiplies mode k by exp(2*pi*i*k*a)."""
    return from_fourier(
        [(k, c1 * np.exp(2j * np.pi * k * a), c2 * np.exp(2j * np.pi * k * a))
         for k, (c1, c2) in p.modes.items()]
    )


def phase_rotate(p, alpha):
    """(phi_1, phi_2) -> (e^{i alpha} phi_1, e^{-i alpha} phi_2); preserves tags."""
    w = np.exp(1j * alpha)
    return from_fourier([(k, c1 * w, c2 / w) for k, (c1, c2) in p.modes.items()])


def to_json_dict(p):
    return {
        "modes": [
            {"k": k, "phi1": [c1.real, c1.imag], "phi2": [c2.real, c2.imag]}
            for k, (c1, c2) in sorted(p.modes.items())
        ],
        "tag": p.real_type,
    }


def from_json_dict(d):
    try:
        triples = [
            (m["k"], complex(m["phi1"][0], m["phi1"][1]),
             complex(m["phi2"][0], m["phi2"][1]))
            for m in d["modes"]
        ]
    except (KeyError, TypeError, IndexError) as exc:
        raise IoError(f"malformed potential JSON: {exc}") from exc
    p = from_fourier(triples)
    tag = d.get("tag")
    if tag and tag != p.real_type:
        # stored tag wins only if consistent with the coefficients
        if tag in (FOCUSING, DEFOCUSING):
            raise IoError(f"tag {tag!r} inconsistent with coefficients ({p.real_type})")
        p = Potential(modes=p.modes, real_type=tag, grid_size=p.grid_size)
    return p


def load(path):
    try:
        with open(path) as fh:
            return from_json_dict(json.load(fh))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"invalid JSON in {path}: {exc}") from exc


def save(p, path):
    try:
        with open(path, "w") as fh:
            json.dump(to_json_dict(p), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc
