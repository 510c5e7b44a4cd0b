"""Split-step integrator for the focusing NLS and isospectrality checks.

The flow i u_t = -u_xx - 2|u|^2 u is integrated by Strang splitting: a half
step of the exact nonlinear phase rotation, a full linear step by the spectral
multiplier exp(-i (2 pi k)^2 dt), and another half step.  Snapshots re-enter
the spectral pipeline as truncated Fourier potentials.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .birkhoff import Workspace
from .errors import BlowupGuard, BranchLost
from .monodromy import delta_batch
from .potential import FOCUSING, from_u

BLOWUP_LIMIT = 1e6


@dataclass
class Trajectory:
    times: list
    states: list                 # Potential snapshots (focusing-tagged)
    grid: int
    dt: float


def _u_grid(p, N):
    x = np.arange(N) / N
    u = np.zeros(N, dtype=complex)
    for k, (c1, _) in p.modes.items():
        u += (-1j * c1) * np.exp(2j * np.pi * k * x)   # u = -i phi_1
    return u


def _snapshot_potential(u, N):
    uhat = np.fft.fft(u) / N
    kk = np.fft.fftfreq(N, d=1.0 / N).astype(int)
    keep = np.abs(kk) <= N // 3
    modes = [(int(k), uh) for k, uh in zip(kk[keep], uhat[keep]) if abs(uh) > 1e-14]
    return from_u(modes)


def evolve_fnls(p, T, dt, N):
    """Trajectory of i u_t = -u_xx - 2 |u|^2 u from u = -i phi_1."""
    if p.real_type != FOCUSING:
        raise ValueError("the NLS flow is defined on focusing potentials")
    if N < 128 or (N & (N - 1)) != 0:
        raise ValueError("grid must be a power of two, at least 128")
    if dt > 1e-4:
        raise ValueError("dt must be at most 1e-4")

    u = _u_grid(p, N)
    k = np.fft.fftfreq(N, d=1.0 / N)
    linear = np.exp(-1j * (2 * np.pi * k) ** 2 * dt)

    steps = int(round(T / dt))
    stride = max(1, int(round(T / (100 * dt))))
    times = [0.0]
    states = [_snapshot_potential(u, N)]
    for j in range(1, steps + 1):
        u = u * np.exp(2j * np.abs(u) ** 2 * (dt / 2))
        u = np.fft.ifft(np.fft.fft(u) * linear)
        u = u * np.exp(2j * np.abs(u) ** 2 * (dt / 2))
        if np.max(np.abs(u)) > BLOWUP_LIMIT:
            raise BlowupGuard(f"|u| exceeded {BLOWUP_LIMIT} at step {j}")
        if j % stride == 0 or j == steps:
            times.append(j * dt)
            states.append(_snapshot_potential(u, N))
    return Trajectory(times=times, states=states, grid=N, dt=dt)


def isospectrality_drift(traj, probes, cfg=None):
    """max over snapshots and probes of |Delta(lambda, phi(t)) - Delta(lambda, phi(0))|."""
    probes = np.asarray(probes, dtype=complex)
    base, _ = delta_batch(traj.states[0], probes, cfg) if cfg else delta_batch(traj.states[0], probes)
    worst = 0.0
    for p in traj.states[1:]:
        d, _ = delta_batch(p, probes, cfg) if cfg else delta_batch(p, probes)
        worst = max(worst, float(np.max(np.abs(d - base))))
    return worst


def angle_linearity(traj, n, n_max=6, cfg=None, track_action=True):
    """Least-squares slope of theta_n(t) with branch unwrapping.

    Returns (slope, max fit residual, action drift).  Successive snapshots are
    analyzed with workspaces reseeded from the previous one, so the angle
    branch is carried continuously along the trajectory.
    """
    ws = Workspace.build(traj.states[0], n_max, cfg)
    if abs(ws.cat.gamma(n)) < 1e-9:
        raise ValueError(f"gap {n} is closed at t=0; angle undefined")
    thetas = [float(ws.theta(n).real)]
    acts = [complex(ws.action(n))]
    prev_ws = ws
    for p in traj.states[1:]:
        wsn = Workspace.build_near(p, prev_ws)
        th = float(wsn.theta(n).real)
        # unwrap toward the previous snapshot
        kk = np.round((th - thetas[-1]) / (2 * np.pi))
        th = th - 2 * np.pi * kk
        if abs(th - thetas[-1]) > np.pi:
            raise BranchLost(
                f"angle jump {abs(th - thetas[-1]):.2f} > pi between snapshots; "
                "decrease the snapshot spacing"
            )
        thetas.append(th)
        if track_action:
            acts.append(complex(wsn.action(n)))
        prev_ws = wsn

    t = np.asarray(traj.times)
    th = np.asarray(thetas)
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, th, rcond=None)
    fit = A @ coef
    residual = float(np.max(np.abs(th - fit)))
    drift = float(np.max(np.abs(np.asarray(acts) - acts[0]))) if track_action else None
    return float(coef[0]), residual, drift
