"""Command-line front end: spectrum | dirichlet | actions | angles | birkhoff
| evolve | verify, with deterministic JSON/CSV reports."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import angles as ang
from . import differentials as dif
from . import evolution as ev
from . import potential as pot
from . import spectrum as spb
from . import verify as vf
from .actions import compute_actions
from .birkhoff import Workspace, birkhoff_coordinates, fourier_defect, pipeline_cfg
from .errors import FocusingRequired, IoError, ParseError, PipelineError, ZsbError
from .monodromy import IntegratorConfig, delta_batch
from .roots_contours import RootEvaluator, build_cut_contour_system

SCHEMA = "zsb/1"


@dataclass
class RunConfig:
    subcommand: str
    input_path: str
    n_max: int = 8
    tol_root: float = 1e-12
    tol_quad: float = 1e-9
    fd_step: float = 1e-5
    out: str = ""
    fmt: str = "json"
    threads: int = 1
    steps: int = 512
    richardson: bool | None = None
    # evolve options
    t_final: float = 0.01
    dt: float = 1e-5
    grid: int = 256
    probes: list = field(default_factory=lambda: [1.0, 2j, 3 + 0.5j])
    track: list = field(default_factory=list)
    # verify options
    suite: str = "symmetry"

    def __post_init__(self):
        if not 4 <= self.n_max <= 256:
            raise ParseError("n_max must be between 4 and 256")
        if not 1e-14 <= self.tol_root <= 1e-6:
            raise ParseError("tol_root outside [1e-14, 1e-6]")
        if not 1e-12 <= self.tol_quad <= 1e-6:
            raise ParseError("tol_quad outside [1e-12, 1e-6]")
        if not 1e-7 <= self.fd_step <= 1e-3:
            raise ParseError("fd_step outside [1e-7, 1e-3]")


def make_pmap(threads):
    """Order-preserving parallel map; determinism comes from the fixed order."""
    if threads <= 1:
        return map

    def pmap(fn, items):
        items = list(items)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return iter(list(ex.map(fn, items)))

    return pmap


def _fmt_float(x):
    return float(f"{x:.16g}")


def _report(rows, meta=None):
    out = {"schema": SCHEMA}
    if meta:
        out.update(meta)
    out["rows"] = rows
    return out


def emit_report(report, fmt="json", path=""):
    """Serialize a report deterministically; CSV uses RFC-4180 quoting."""
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=False, allow_nan=True)
        text += "\n"
    elif fmt == "csv":
        rows = report["rows"]
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()),
                                    lineterminator="\r\n")
            writer.writeheader()
            writer.writerows(rows)
        text = buf.getvalue()
    else:
        raise ParseError(f"unknown format {fmt!r}")
    if path:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(str(exc)) from exc
    else:
        sys.stdout.write(text)
    return text


def _cfg(run, p):
    rich = run.richardson
    if rich is None:
        rich = p.max_mode > 0
    return IntegratorConfig(steps=run.steps, richardson=rich)


def _load_potential(run):
    try:
        return pot.load(run.input_path)
    except IoError as exc:
        raise ParseError(str(exc)) from exc


def _require_focusing(p, what):
    if p.real_type != pot.FOCUSING:
        raise FocusingRequired(f"{what} requires a focusing potential, got tag "
                               f"{p.real_type!r}")


def _stage(stage, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except ZsbError as exc:
        raise PipelineError(stage, exc) from exc


def cmd_spectrum(run):
    p = _load_potential(run)
    cat = _stage("spectrum", spb.build_catalog, p, run.n_max, _cfg(run, p))
    rows = []
    for n in cat.indices():
        rows.append({
            "n": n,
            "lam_plus_re": _fmt_float(cat.lam_plus[n].real),
            "lam_plus_im": _fmt_float(cat.lam_plus[n].imag),
            "lam_minus_re": _fmt_float(cat.lam_minus[n].real),
            "lam_minus_im": _fmt_float(cat.lam_minus[n].imag),
            "gap_re": _fmt_float(cat.gamma(n).real),
            "gap_im": _fmt_float(cat.gamma(n).imag),
            "tau_re": _fmt_float(cat.tau(n).real),
            "tau_im": _fmt_float(cat.tau(n).imag),
            "lamdot_re": _fmt_float(cat.lamdot[n].real),
            "lamdot_im": _fmt_float(cat.lamdot[n].imag),
            "mult": cat.mult.get(n, 1),
        })
    return _report(rows, {"R": cat.R, "n_max": cat.n_max}), 0


def cmd_dirichlet(run):
    p = _load_potential(run)
    cat = _stage("spectrum", spb.build_catalog, p, run.n_max, _cfg(run, p))
    rows = [{"n": n,
             "mu_re": _fmt_float(cat.mu[n].real),
             "mu_im": _fmt_float(cat.mu[n].imag)} for n in cat.indices()]
    return _report(rows, {"R": cat.R, "n_max": cat.n_max}), 0


def cmd_actions(run):
    p = _load_potential(run)
    cfg = _cfg(run, p)
    cat = _stage("spectrum", spb.build_catalog, p, run.n_max, cfg)
    sysc = _stage("contours", build_cut_contour_system, cat)
    roots = RootEvaluator(p, cat, sysc, cfg)
    pmap = make_pmap(run.threads)
    aset = _stage("actions", compute_actions, p, cat, sysc, roots, None, cfg, pmap)
    rows = []
    for n in aset.indices():
        e = aset.entries[n]
        xi_v = e["xi"] if isinstance(e["xi"], complex) else complex(np.nan)
        rat = e["ratio"]
        rows.append({
            "n": n,
            "I_re": _fmt_float(e["I"].real), "I_im": _fmt_float(e["I"].imag),
            "xi_re": _fmt_float(np.real(xi_v)), "xi_im": _fmt_float(np.imag(xi_v)),
            "ratio_re": _fmt_float(np.real(rat)), "ratio_im": _fmt_float(np.imag(rat)),
            "err": _fmt_float(e["err"]),
        })
    return _report(rows, {"R": cat.R}), 0


def cmd_angles(run):
    p = _load_potential(run)
    cfg = _cfg(run, p)
    ws = _stage("pipeline", Workspace.build, p, run.n_max, cfg)
    rows = []
    for n in ws.cat.indices():
        if abs(n) > ws.cat.R and abs(ws.cat.gamma(n)) <= 1e-9:
            continue
        th = _stage("angles", ws.theta, n)
        terms = sum(
            1 for k in ws.cat.indices()
            if k != n and abs(k) > ws.cat.R
            and abs(ws.cat.gamma(k)) + abs(ws.cat.mu[k] - ws.cat.tau(k)) > 1e-10
        )
        rows.append({"n": n, "theta": _fmt_float(th.real),
                     "im_residual": _fmt_float(abs(th.imag)),
                     "terms_used": terms})
    return _report(rows, {"R": ws.cat.R}), 0


def cmd_birkhoff(run):
    p = _load_potential(run)
    _require_focusing(p, "the Birkhoff map")
    st = _stage("birkhoff", birkhoff_coordinates, p, run.n_max, _cfg(run, p))
    rows = []
    for n in sorted(st.entries):
        e = st.entries[n]
        th = e["theta"]
        rows.append({
            "n": n,
            "u": _fmt_float(np.real(e["u"])),
            "v": _fmt_float(np.real(e["v"])),
            "I_re": _fmt_float(e["I"].real),
            "I_im": _fmt_float(e["I"].imag),
            "theta": _fmt_float(np.real(th)) if np.isfinite(np.real(th)) else None,
            "collapsed": bool(e["collapsed"]),
        })
    meta = {"R": st.R, "n_max": st.n_max,
            "flags": [[f, n, _fmt_float(v.real)] for f, n, v in st.flags]}
    return _report(rows, meta), 0


def cmd_evolve(run):
    p = _load_potential(run)
    _require_focusing(p, "the NLS flow")
    traj = _stage("evolve", ev.evolve_fnls, p, run.t_final, run.dt, run.grid)
    drift = _stage("evolve", ev.isospectrality_drift, traj, run.probes)
    rows = [{"t": _fmt_float(t),
             "l2_norm": _fmt_float(pot.sobolev_norm(s, 0)),
             "h_nls_re": _fmt_float(pot.nls_hamiltonian(s).real)}
            for t, s in zip(traj.times, traj.states)]
    meta = {"probe_drift": _fmt_float(drift), "dt": run.dt, "grid": run.grid}
    tracked = {}
    for n in run.track:
        slope, res, idrift = _stage("evolve", ev.angle_linearity, traj, n)
        tracked[str(n)] = {"omega_hat": _fmt_float(slope),
                           "fit_residual": _fmt_float(res),
                           "action_drift": _fmt_float(idrift)}
    if tracked:
        meta["tracked_angles"] = tracked
    return _report(rows, meta), 0


def _verify_symmetry(p, run, checks):
    cfg = _cfg(run, p)
    cat = spb.build_catalog(p, run.n_max, cfg)
    rep = spb.check_real_type_symmetry(cat)
    checks.append(("spectrum_conjugation", rep["max_violation"], 1e-8))
    lams = np.linspace(-10, 10, 101).astype(complex)
    d, _ = delta_batch(p, lams, cfg)
    checks.append(("delta_real_on_axis", float(np.max(np.abs(d.imag))), 1e-10))
    checks.append(("delta_range", float(np.max(np.abs(d.real)) - 2.0), 1e-9))
    return cat


def _verify_actions(p, run, checks):
    cfg = _cfg(run, p)
    cat = spb.build_catalog(p, run.n_max, cfg)
    sysc = build_cut_contour_system(cat)
    roots = RootEvaluator(p, cat, sysc, cfg)
    aset = compute_actions(p, cat, sysc, roots, None, cfg)
    im_worst = max(abs(e["I"].imag) for e in aset.entries.values())
    checks.append(("actions_real", im_worst, 1e-9))
    pos_worst = max((e["I"].real for n, e in aset.entries.items() if abs(n) > cat.R),
                    default=0.0)
    checks.append(("actions_nonpositive", pos_worst, 1e-9))
    closed = [abs(aset.entries[n]["I"]) for n in cat.indices()
              if abs(n) > cat.R and abs(cat.gamma(n)) < 1e-8]
    checks.append(("closed_gap_actions_zero", max(closed, default=0.0), 1e-9))


def _verify_decay(p, run, checks):
    cfg = _cfg(run, p)
    cat = spb.build_catalog(p, run.n_max, cfg)
    devs = [abs(cat.lam_plus[n] - n * np.pi) for n in cat.indices() if abs(n) > cat.R]
    half = len(devs) // 2
    tail = max(devs[:max(1, len(devs) // 4)] + devs[-max(1, len(devs) // 4):])
    mid = np.median(devs) if devs else 0.0
    checks.append(("eigenvalue_decay_tail", float(tail - 10 * mid - 1e-6), 0.0))


def _verify_canonical(p, run, checks):
    cat = spb.build_catalog(p, run.n_max, _cfg(run, p))
    open_ns = [n for n in cat.open_indices() if abs(n) > cat.R][:2]
    if not open_ns:
        checks.append(("canonical_suite_skipped_no_open_gaps", 0.0, 1.0))
        return
    rep = vf.canonical_suite(p, open_ns, M=min(8, run.n_max), h=run.fd_step)
    checks.append(("canonical_relations", rep.max_deviation, 5e-3))


def _verify_gradients(p, run, checks):
    ns = [n for n in range(4, min(run.n_max, 8))]
    rep = vf.gradient_asymptotics_suite(p, ns, h=run.fd_step)
    seq = [rep[n]["x_defect"] for n in ns]
    worst = max((seq[i + 1] - seq[i] - 1e-6 for i in range(len(seq) - 1)), default=0.0)
    checks.append(("gradient_defect_decay", worst, 0.0))


def cmd_verify(run):
    p = _load_potential(run)
    _require_focusing(p, "the verification suites")
    checks = []
    suites = {
        "symmetry": [_verify_symmetry],
        "actions": [_verify_actions],
        "decay": [_verify_decay],
        "canonical": [_verify_canonical],
        "gradients": [_verify_gradients],
    }
    if run.suite == "all":
        todo = [f for fns in suites.values() for f in fns]
    elif run.suite in suites:
        todo = suites[run.suite]
    else:
        raise ParseError(f"unknown suite {run.suite!r}")
    for fn in todo:
        _stage("verify", fn, p, run, checks)
    rows = [{"check": name, "value": _fmt_float(val), "tol": _fmt_float(tol),
             "pass": bool(val <= tol)} for name, val, tol in checks]
    ok = all(r["pass"] for r in rows)
    return _report(rows, {"suite": run.suite}), (0 if ok else 2)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "dirichlet": cmd_dirichlet,
    "actions": cmd_actions,
    "angles": cmd_angles,
    "birkhoff": cmd_birkhoff,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
}


def dispatch(run):
    """Run a subcommand; returns the process exit status."""
    try:
        report, status = COMMANDS[run.subcommand](run)
    except (ParseError, IoError, FocusingRequired, PipelineError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    emit_report(report, run.fmt, run.out)
    return status


def _parse_probes(text):
    out = []
    for item in text.split(","):
        item = item.strip().replace("i", "j")
        out.append(complex(item))
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="zsb", description=__doc__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--in", dest="input_path", required=True)
        sp.add_argument("--n-max", type=int, default=8)
        sp.add_argument("--tol-root", type=float, default=1e-12)
        sp.add_argument("--tol-quad", type=float, default=1e-9)
        sp.add_argument("--fd-step", type=float, default=1e-5)
        sp.add_argument("--winding-nodes", type=int, default=128)
        sp.add_argument("--steps", type=int, default=512)
        sp.add_argument("--out", default="")
        sp.add_argument("--format", dest="fmt", choices=("json", "csv"),
                        default="json")
        if name == "evolve":
            sp.add_argument("--t", dest="t_final", type=float, default=0.01)
            sp.add_argument("--dt", type=float, default=1e-5)
            sp.add_argument("--grid", type=int, default=256)
            sp.add_argument("--probes", type=str, default="1,2j,3+0.5j")
            sp.add_argument("--track", type=str, default="")
        if name == "verify":
            sp.add_argument("--suite", default="symmetry",
                            choices=("symmetry", "decay", "actions", "canonical",
                                     "gradients", "all"))
    return ap


def main(argv=None):
    ap = build_parser()
    ns = ap.parse_args(argv)
    threads = int(os.environ.get("ZSB_THREADS", "1"))
    kwargs = dict(
        subcommand=ns.subcommand,
        input_path=ns.input_path,
        n_max=ns.n_max,
        tol_root=ns.tol_root,
        tol_quad=ns.tol_quad,
        fd_step=ns.fd_step,
        out=ns.out,
        fmt=ns.fmt,
        threads=threads,
        steps=ns.steps,
    )
    if ns.subcommand == "evolve":
        kwargs.update(
            t_final=ns.t_final, dt=ns.dt, grid=ns.grid,
            probes=_parse_probes(ns.probes),
            track=[int(x) for x in ns.track.split(",") if x.strip()],
        )
    if ns.subcommand == "verify":
        kwargs["suite"] = ns.suite
    try:
        run = RunConfig(**kwargs)
    except ParseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return dispatch(run)


if __name__ == "__main__":
    sys.exit(main())
