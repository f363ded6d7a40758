"""Command-line orchestration and file output.

Subcommands: trajectories, entropy-scan, gutzwiller, lindblad-check,
ancilla, fit.  Options come from an optional JSON config file with CLI
flags taking precedence.  Every run writes manifest.json before any
compute starts, so crashed runs still carry full provenance.

Exit codes: 0 success, 2 validation error, 3 numeric guard tripped,
4 acceptance-comparison failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .cftfit import fit_profile
from .entropy import EntropyProfile, average_profile
from .fock import build_basis, build_bec_dark_state
from .gutzwiller import GwConfig, order_parameter_sweep
from .lindblad import compare_with_ensemble, default_observables, evolve_lindblad
from .trajectory import (JumpChannels, MonitoringConfig, StepSizeError,
                         default_dt, default_initial_state, run_ensemble)
from . import ancilla as anc

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GUARD = 3
EXIT_COMPARISON = 4


class ValidationError(ValueError):
    pass


def _output_root() -> Path:
    return Path(os.environ.get("BOSETRAJ_OUTPUT", "runs"))


def _fmt(x) -> str:
    # repr of a builtin float is the shortest exact round-trip form, which
    # keeps reruns byte-identical; numpy scalars are coerced first so their
    # wrapper repr never leaks into the files.
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_manifest(outdir: Path, spec: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    # the worker count is an execution detail, not part of the run spec:
    # results are worker-invariant, so the manifest must be too
    recorded = {k: v for k, v in spec.items() if k != "workers"}
    manifest = {"version": __version__, "spec": recorded}
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return manifest


def _append_manifest(outdir: Path, extra: dict):
    path = outdir / "manifest.json"
    manifest = json.loads(path.read_text())
    manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))


def resolve_rates(spec: dict):
    """gamma and (Lambda, Gamma) are mutually exclusive; gamma implies
    Lambda = 1."""
    has_gamma = spec.get("gamma") is not None
    has_rates = spec.get("rate_phaselock") is not None or spec.get("rate_dephase") is not None
    if has_gamma and has_rates:
        raise ValidationError("give either gamma or (rate_phaselock, rate_dephase), not both")
    if has_gamma:
        return 1.0, float(spec["gamma"])
    lam = float(spec.get("rate_phaselock", 1.0))
    gam = float(spec.get("rate_dephase", 0.0))
    return lam, gam


def build_model(spec: dict):
    L = int(spec.get("L", 4))
    N = int(spec.get("N", L))
    n_max = int(spec.get("n_max", min(N, 4)))
    basis = build_basis(L, N, n_max)
    lam, gam = resolve_rates(spec)
    channels = JumpChannels(basis, lam, gam)
    dt = spec.get("dt")
    if dt is None:
        dt = default_dt(channels, target_dp=float(spec.get("target_dp", 1e-3)))
    cfg = MonitoringConfig(rate_phaselock=lam, rate_dephase=gam, dt=float(dt),
                           t_max=float(spec.get("t_max", 10.0)),
                           seed=int(spec.get("seed", 0)),
                           snapshot_times=tuple(spec.get("snapshot_times", [])))
    return basis, channels, cfg


def initial_state(spec: dict, basis):
    name = spec.get("initial_state", "fock")
    if name == "fock":
        return default_initial_state(basis)
    if name == "dark":
        return build_bec_dark_state(basis)
    raise ValidationError(f"unknown initial_state {name!r}")


def _gamma_of(cfg) -> float:
    g = cfg.reduced_dephasing
    return g if np.isfinite(g) else -1.0


def _profile_rows(profile: EntropyProfile):
    alpha = profile.alpha if profile.alpha is not None else ""
    for l, m, s in zip(profile.ls, profile.mean, profile.stderr):
        yield (profile.gamma, profile.L, profile.t, int(l), profile.kind,
               alpha, m, s, profile.M)


PROFILE_HEADER = ["gamma", "L", "t", "l", "kind", "alpha", "mean", "stderr", "M"]
OBS_HEADER = ["t", "trajectory_id", "observable_name", "value_re", "value_im"]


def _write_observables(outdir: Path, ensemble, observables):
    rows = []
    for t in ensemble.snapshot_times:
        states = ensemble.states_at(t)
        for name, op in observables.items():
            vals = np.einsum("mi,ij,mj->m", states.conj(), op, states)
            for m, v in enumerate(vals):
                rows.append((t, m, name, v.real, v.imag))
    write_csv(outdir / "observables.csv", OBS_HEADER, rows)


def cmd_trajectories(spec: dict, outdir: Path) -> int:
    basis, channels, cfg = build_model(spec)
    if not cfg.snapshot_times:
        times = np.linspace(0.0, cfg.t_max, int(spec.get("n_snapshots", 21)))
        cfg = MonitoringConfig(rate_phaselock=cfg.rate_phaselock,
                               rate_dephase=cfg.rate_dephase, dt=cfg.dt,
                               t_max=cfg.t_max, seed=cfg.seed,
                               snapshot_times=tuple(times))
    write_manifest(outdir, spec | {"resolved_dt": cfg.dt})
    psi0 = initial_state(spec, basis)
    M = int(spec.get("M", 100))
    ensemble = run_ensemble(basis, psi0, cfg, M, workers=int(spec.get("workers", 1)))
    _write_observables(outdir, ensemble, default_observables(basis))
    gamma = _gamma_of(cfg)
    prof_rows = []
    for t in ensemble.snapshot_times:
        prof = average_profile(ensemble.states_at(t), basis, gamma, t)
        prof_rows.extend(_profile_rows(prof))
    write_csv(outdir / "profile.csv", PROFILE_HEADER, prof_rows)
    _append_manifest(outdir, {"jump_count_mean": float(ensemble.jump_counts.mean())})
    return EXIT_OK


def cmd_entropy_scan(spec: dict, outdir: Path) -> int:
    gammas = spec.get("gamma_grid")
    if not gammas:
        raise ValidationError("entropy-scan needs a gamma_grid")
    write_manifest(outdir, spec)
    alphas = spec.get("renyi_orders", [])
    prof_rows = []
    fits = []
    for gamma in gammas:
        sub = dict(spec)
        sub.pop("gamma_grid", None)
        sub["gamma"] = gamma
        basis, channels, cfg = build_model(sub)
        t_obs = cfg.t_max
        cfg = MonitoringConfig(rate_phaselock=cfg.rate_phaselock,
                               rate_dephase=cfg.rate_dephase, dt=cfg.dt,
                               t_max=cfg.t_max, seed=cfg.seed,
                               snapshot_times=(t_obs,))
        psi0 = initial_state(sub, basis)
        ensemble = run_ensemble(basis, psi0, cfg, int(spec.get("M", 100)),
                                workers=int(spec.get("workers", 1)))
        states = ensemble.states_at(t_obs)
        kinds = [("vn", None)] + [("renyi", a) for a in alphas]
        for kind, alpha in kinds:
            prof = average_profile(states, basis, gamma, t_obs, kind=kind, alpha=alpha)
            prof_rows.extend(_profile_rows(prof))
            fit = fit_profile(prof, l_min=spec.get("fit_l_min"),
                              l_max=spec.get("fit_l_max"))
            fits.append({"gamma": gamma, "L": basis.L, "t": t_obs, "kind": kind,
                         "alpha": alpha, "c": fit.c, "s0": fit.s0,
                         "c_stderr": fit.c_stderr, "s0_stderr": fit.s0_stderr,
                         "residual_rms": fit.residual_rms,
                         "l_min": fit.l_min, "l_max": fit.l_max})
    write_csv(outdir / "profile.csv", PROFILE_HEADER, prof_rows)
    with open(outdir / "fits.json", "w") as fh:
        json.dump(fits, fh, indent=2)
    return EXIT_OK


def cmd_gutzwiller(spec: dict, outdir: Path) -> int:
    write_manifest(outdir, spec)
    grid = spec.get("gamma_grid") or list(np.linspace(0.0, 6.0, 25))
    template = GwConfig(rate_phaselock=float(spec.get("rate_phaselock", 1.0)),
                        n_max=int(spec.get("n_max", 8)),
                        dt=float(spec.get("dt", 0.005)),
                        t_max=float(spec.get("t_max", 400.0)))
    sweep = order_parameter_sweep(grid, template,
                                  alpha_threshold=float(spec.get("alpha_threshold", 1e-3)))
    write_csv(outdir / "sweep.csv", ["gamma", "alpha_abs", "converged", "t_reached"],
              [(p.gamma, p.alpha_abs, p.converged, p.t_reached) for p in sweep.points])
    _append_manifest(outdir, {"gamma_c": sweep.gamma_c})
    return EXIT_OK


def cmd_lindblad_check(spec: dict, outdir: Path) -> int:
    basis, channels, cfg = build_model(spec)
    times = tuple(spec.get("snapshot_times") or (0.5, 1.0, 2.0, 5.0))
    cfg = MonitoringConfig(rate_phaselock=cfg.rate_phaselock,
                           rate_dephase=cfg.rate_dephase, dt=cfg.dt,
                           t_max=max(times), seed=cfg.seed, snapshot_times=times)
    write_manifest(outdir, spec | {"resolved_dt": cfg.dt})
    psi0 = initial_state(spec, basis)
    ensemble = run_ensemble(basis, psi0, cfg, int(spec.get("M", 2000)),
                            workers=int(spec.get("workers", 1)))
    rho0 = np.outer(psi0.amplitudes, psi0.amplitudes.conj())
    series = evolve_lindblad(basis, rho0, cfg.rate_phaselock, cfg.rate_dephase,
                             ensemble.snapshot_times)
    report = compare_with_ensemble(series, ensemble)
    _write_observables(outdir, ensemble, default_observables(basis))
    with open(outdir / "comparison.json", "w") as fh:
        json.dump({"passed": report.passed, "max_abs_z": report.max_abs_z,
                   "z_scores": {k: list(v) for k, v in report.z_scores.items()}},
                  fh, indent=2)
    return EXIT_OK if report.passed else EXIT_COMPARISON


def cmd_ancilla(spec: dict, outdir: Path) -> int:
    write_manifest(outdir, spec)
    scheme = spec.get("scheme", "dephasing")
    n_traj = int(spec.get("M", 100))
    seed = int(spec.get("seed", 0))
    if scheme == "dephasing":
        g = float(spec.get("g_eff", 1.0))
        target = float(spec.get("rate_dephase", 1.0))
        kappa = float(spec.get("kappa", 500.0 * g ** 2 / target))
        n1, n2 = int(spec.get("n1", 1)), int(spec.get("n2", 3))
        cfg = anc.CircuitConfig(g_eff=g, kappa=kappa, seed=seed,
                                n_max=max(n2 + 1, 4),
                                t_max=float(spec.get("t_max", 10.0 / target)))
        psi0 = anc.superposition_cavity_state(n1, n2, cfg.n_max)
        rows, outcomes = [], []
        for i in range(n_traj):
            out = anc.run_dephasing_circuit(cfg, psi0, traj_index=i)
            for c in out.trajectory.clicks:
                rows.append((c.time, c.channel))
            outcomes.append({"trajectory": i, "collapsed_to": out.collapsed_to,
                             "dominant_weight": out.dominant_weight,
                             "click_count": out.click_count})
        write_csv(outdir / "clicks.csv", ["t", "channel"], rows)
        with open(outdir / "outcomes.json", "w") as fh:
            json.dump(outcomes, fh, indent=2)
        return EXIT_OK
    if scheme == "phaselock":
        g = float(spec.get("g_eff", 1.0))
        kappa = float(spec.get("kappa", 50.0 * g))
        cfg = anc.CircuitConfig(g_eff=g, kappa=kappa, seed=seed,
                                h_eff=float(spec.get("h_eff", 0.0)),
                                n_max=int(spec.get("n_max", 4)),
                                t_max=float(spec.get("t_max", 2.0 * kappa / g ** 2)))
        rows, outcomes = [], []
        for i in range(n_traj):
            traj = anc.run_phaselock_circuit(cfg, traj_index=i)
            for c in traj.clicks:
                rows.append((c.time, c.channel))
            outcomes.append({"trajectory": i, "click_count": len(traj.clicks),
                             "final_entropy": anc._pair_entropy(traj.final_state,
                                                                cfg.n_max)})
        write_csv(outdir / "clicks.csv", ["t", "channel"], rows)
        with open(outdir / "outcomes.json", "w") as fh:
            json.dump(outcomes, fh, indent=2)
        return EXIT_OK
    raise ValidationError(f"unknown ancilla scheme {scheme!r}")


def cmd_fit(spec: dict, outdir: Path) -> int:
    src = spec.get("profile_csv")
    if not src or not Path(src).exists():
        raise ValidationError("fit needs an existing profile_csv")
    write_manifest(outdir, spec)
    rows = list(csv.DictReader(open(src)))
    groups = {}
    for r in rows:
        key = (float(r["gamma"]), int(r["L"]), float(r["t"]), r["kind"],
               r["alpha"] or None)
        groups.setdefault(key, []).append(r)
    fits = []
    for (gamma, L, t, kind, alpha), rs in groups.items():
        rs = sorted(rs, key=lambda r: int(r["l"]))
        prof = EntropyProfile(
            gamma=gamma, L=L, t=t, kind=kind,
            alpha=float(alpha) if alpha else None,
            ls=np.array([int(r["l"]) for r in rs]),
            mean=np.array([float(r["mean"]) for r in rs]),
            stderr=np.array([float(r["stderr"]) for r in rs]),
            M=int(rs[0]["M"]))
        fit = fit_profile(prof, l_min=spec.get("fit_l_min"),
                          l_max=spec.get("fit_l_max"))
        fits.append({"gamma": gamma, "L": L, "t": t, "kind": kind, "alpha": prof.alpha,
                     "c": fit.c, "s0": fit.s0, "c_stderr": fit.c_stderr,
                     "s0_stderr": fit.s0_stderr, "residual_rms": fit.residual_rms,
                     "l_min": fit.l_min, "l_max": fit.l_max})
    with open(outdir / "fits.json", "w") as fh:
        json.dump(fits, fh, indent=2)
    return EXIT_OK


COMMANDS = {
    "trajectories": cmd_trajectories,
    "entropy-scan": cmd_entropy_scan,
    "gutzwiller": cmd_gutzwiller,
    "lindblad-check": cmd_lindblad_check,
    "ancilla": cmd_ancilla,
    "fit": cmd_fit,
}

_FLAG_TYPES = {
    "L": int, "N": int, "n_max": int, "M": int, "seed": int, "workers": int,
    "n_snapshots": int, "fit_l_min": int, "fit_l_max": int,
    "n1": int, "n2": int,
    "gamma": float, "rate_phaselock": float, "rate_dephase": float,
    "dt": float, "t_max": float, "target_dp": float, "g_eff": float,
    "h_eff": float, "kappa": float, "alpha_threshold": float,
    "initial_state": str, "scheme": str, "profile_csv": str,
}


def build_parser():
    p = argparse.ArgumentParser(prog="bosetraj",
                                description="Monitored bosonic chain simulator")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--outdir", help="output directory (default under "
                                    "$BOSETRAJ_OUTPUT or ./runs)")
    for name, typ in _FLAG_TYPES.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ)
    p.add_argument("--gamma-grid", dest="gamma_grid",
                   help="comma-separated reduced dephasing rates")
    p.add_argument("--renyi-orders", dest="renyi_orders",
                   help="comma-separated Renyi orders for entropy-scan")
    p.add_argument("--snapshot-times", dest="snapshot_times",
                   help="comma-separated observation times")
    return p


def parse_spec(argv):
    args = build_parser().parse_args(argv)
    spec = {}
    if args.config:
        spec.update(json.loads(Path(args.config).read_text()))
    for name in _FLAG_TYPES:
        v = getattr(args, name)
        if v is not None:
            spec[name] = v
    for name in ("gamma_grid", "renyi_orders", "snapshot_times"):
        v = getattr(args, name)
        if v is not None:
            spec[name] = [float(x) for x in v.split(",") if x]
    spec["command"] = args.command
    outdir = Path(args.outdir) if args.outdir else _output_root() / args.command
    return args.command, spec, outdir


def main(argv=None) -> int:
    command, spec, outdir = parse_spec(argv if argv is not None else sys.argv[1:])
    try:
        return COMMANDS[command](spec, outdir)
    except (ValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StepSizeError, RuntimeError) as e:
        print(f"numeric guard: {e}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
