"""Command line front end.

    interface-lab simulate --config run.cfg [--output-dir out] [key=value ...]
    interface-lab simulate --manifest out/manifest.json --output-dir replay
    interface-lab dispersion --rho-plus 1 --rho-minus 1 --slip 2 --modes 1..32
    interface-lab operators --preset circle --radius 2 --modes 1..16
    interface-lab pressure-test --preset ellipse
    interface-lab energy --preset perturbed --gamma mode:2,0.1
    interface-lab convergence --preset ellipse --gamma mode:1,0.5

Exit codes: 0 success, 2 configuration error, 3 numerical failure (a
``failure.txt`` diagnostic is written to the output directory).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import traceback
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ContractError, InterfaceLabError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------------------
# configuration


def parse_config_text(text):
    out = {}
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ConfigError(f"line {i}: expected key=value, got {raw!r}")
        out[key.strip()] = val.strip()
    return out


def build_run_config(pairs):
    from .evolver import RunConfig

    known = {f.name: f for f in dataclasses.fields(RunConfig)}
    kw = {}
    for k, v in pairs.items():
        if k not in known or k == "extra":
            raise ConfigError(f"unknown config key {k!r}")
        typ = known[k].type
        try:
            if typ in ("float", float):
                kw[k] = float(v)
            elif typ in ("int", int):
                kw[k] = int(v)
            else:
                kw[k] = v
        except ValueError as exc:
            raise ConfigError(f"bad value for {k}: {v!r}") from exc
    cfg = RunConfig(**kw)
    if cfg.n_nodes < 8 or cfg.dt <= 0 or cfg.t_end < 0 or cfg.report_every < 1:
        raise ConfigError("n_nodes >= 8, dt > 0, t_end >= 0 and report_every >= 1 are required")
    return cfg


def parse_modes(text):
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",")]


@dataclasses.dataclass
class RunManifest:
    subcommand: str
    config: dict
    version: str
    seed: int
    outputs: list

    def write(self, directory):
        path = Path(directory) / "manifest.json"
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path):
        return cls(**json.loads(Path(path).read_text()))


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _r(x):
    return repr(float(x))


def _curve_from_args(args):
    from .evolver import RunConfig, initial_curve

    return initial_curve(RunConfig(n_nodes=args.n_nodes, radius=args.radius, initial_curve=args.preset))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args, out):
    from .evolver import run

    pairs = {}
    if args.manifest:
        try:
            man = RunManifest.read(args.manifest)
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read manifest: {exc}") from exc
        pairs.update({k: str(v) for k, v in man.config.items() if k not in ("extra", "output_dir")})
    if args.config:
        try:
            pairs.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
    for ov in args.overrides:
        pairs.update(parse_config_text(ov))
    cfg = build_run_config(pairs)
    outputs = ["energies.csv", "states/"]
    RunManifest("simulate", dataclasses.asdict(cfg), __version__, cfg.seed, outputs).write(out)
    (out / "states").mkdir(exist_ok=True)
    fh, w = _writer(out / "energies.csv")
    w.writerow(["time", "E0", "E", "E_A_term", "E_kappa_term", "area_drift", "length", "resolved"])
    count = [0]

    def on_report(rec):
        w.writerow([_r(rec.time), _r(rec.E0), _r(rec.E), _r(rec.E_A), _r(rec.E_kappa),
                    _r(rec.area_drift), _r(rec.length), int(rec.resolved)])
        fh.flush()

    def on_state(s):
        s.curve.save(out / "states" / f"state_{count[0]:05d}.curve")
        count[0] += 1

    try:
        run(cfg, on_report, on_state)
    finally:
        fh.close()
    return EXIT_OK


def cmd_dispersion(args, out):
    from .linearized import dispersion, threshold_mode

    modes = parse_modes(args.modes)
    cfg = dict(rho_plus=args.rho_plus, rho_minus=args.rho_minus, slip=args.slip,
               geometry=args.geometry, radius=args.radius, modes=args.modes)
    RunManifest("dispersion", cfg, __version__, 0, ["dispersion.csv"]).write(out)
    m_star = threshold_mode(args.rho_plus, args.rho_minus, args.slip, args.geometry, args.radius)
    fh, w = _writer(out / "dispersion.csv")
    with fh:
        w.writerow(["m", "re_lambda", "im_lambda", "above_threshold"])
        for m in modes:
            lam, _ = dispersion(args.rho_plus, args.rho_minus, args.slip, m, args.geometry, args.radius)
            w.writerow([m, _r(lam.real), _r(lam.imag), int(m > m_star)])
    return EXIT_OK


def _mode_rayleigh(curve, op, m):
    """Rayleigh quotients of ``op`` on ``cos(m alpha)`` and ``sin(m alpha)``, averaged."""
    vals = []
    for f in (np.cos(m * curve.alpha), np.sin(m * curve.alpha)):
        vals.append(curve.inner(f, op(f)) / curve.inner(f, f))
    return 0.5 * (vals[0] + vals[1])


def _sa_defect(curve, op, rng):
    f, g = rng.standard_normal((2, curve.n))
    f, g = (curve.project_mean_zero(np.fft.irfft(np.fft.rfft(x) * np.exp(-0.3 * np.arange(curve.n // 2 + 1)), curve.n))
            for x in (f, g))
    a, b = curve.inner(f, op(g)), curve.inner(op(f), g)
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def cmd_operators(args, out):
    from .curve import surface_laplacian
    from .layers import dtn, dtn_bar

    curve = _curve_from_args(args)
    modes = parse_modes(args.modes)
    rp, rm = args.rho_plus, args.rho_minus
    ops = {
        "dtn_plus": lambda f: dtn(curve, f, +1),
        "dtn_minus": lambda f: dtn(curve, f, -1),
        "nbar": lambda f: dtn_bar(curve, f, rp, rm),
        "neg_laplacian": lambda f: -surface_laplacian(curve, f),
    }
    RunManifest("operators", dict(preset=args.preset, radius=args.radius, n_nodes=args.n_nodes,
                                  rho_plus=rp, rho_minus=rm, modes=args.modes),
                 __version__, args.seed, ["operators.csv", "identities.csv"]).write(out)
    fh, w = _writer(out / "operators.csv")
    with fh:
        w.writerow(["m"] + list(ops))
        for m in modes:
            w.writerow([m] + [_r(_mode_rayleigh(curve, op, m)) for op in ops.values()])
    rng = np.random.default_rng(args.seed)
    fh, w = _writer(out / "identities.csv")
    with fh:
        w.writerow(["operator", "self_adjoint_defect"])
        for name, op in ops.items():
            w.writerow([name, _r(_sa_defect(curve, op, rng))])
    return EXIT_OK


def cmd_pressure_test(args, out):
    from .curve import circle
    from .pressure import pressure_field
    from .velocity import HarmonicVelocity

    RunManifest("pressure-test", dict(preset=args.preset, radius=args.radius, n_nodes=args.n_nodes,
                                      gamma=args.gamma, rho_plus=args.rho_plus, rho_minus=args.rho_minus),
                 __version__, args.seed, ["pressure.csv"]).write(out)
    rows = []
    static = circle(args.radius, args.n_nodes)
    pf = pressure_field(static, HarmonicVelocity.zero(static), args.rho_plus, args.rho_minus)
    rows.append(["static_circle_jump_error", _r(np.max(np.abs(pf.trace.plus - pf.trace.minus - 1 / args.radius)))])
    curve = _curve_from_args(args)
    vel = HarmonicVelocity.from_sheet(curve, _gamma_from_args(args, curve))
    pf = pressure_field(curve, vel, args.rho_plus, args.rho_minus)
    rows.append(["jump_residual", _r(np.max(np.abs(pf.jump_residual())))])
    rows.append(["mean_defect", _r(pf.mean_defect)])
    rows.append(["splitting_defect", _r(pf.splitting_defect())])
    fh, w = _writer(out / "pressure.csv")
    with fh:
        w.writerow(["quantity", "value"])
        w.writerows(rows)
    return EXIT_OK


def _gamma_from_args(args, curve):
    from .evolver import RunConfig, initial_gamma

    return initial_gamma(RunConfig(initial_gamma=args.gamma), curve)


def cmd_energy(args, out):
    from .energy import energy_E, write_reports
    from .evolver import SheetState

    curve = _curve_from_args(args).reparametrize_by_arclength()
    RunManifest("energy", dict(preset=args.preset, radius=args.radius, n_nodes=args.n_nodes, gamma=args.gamma,
                               rho_plus=args.rho_plus, rho_minus=args.rho_minus, k=args.k),
                __version__, args.seed, ["energy.csv"]).write(out)
    st = SheetState.from_gamma(curve, _gamma_from_args(args, curve), args.rho_plus, args.rho_minus)
    rep = energy_E(curve, st.velocity(), args.rho_plus, args.rho_minus, args.k, E0=st.energy0())
    write_reports(out / "energy.csv", [rep])
    return EXIT_OK


def cmd_convergence(args, out):
    from .curve import trig_interpolate
    from .energy import energy_E
    from .evolver import SheetState

    RunManifest("convergence", dict(preset=args.preset, radius=args.radius, gamma=args.gamma,
                                    levels=args.levels, n0=args.n_nodes),
                __version__, args.seed, ["convergence.csv"]).write(out)
    sizes = [args.n_nodes * 2**j for j in range(args.levels)]
    states = []
    for n in sizes:
        a = argparse.Namespace(**{**vars(args), "n_nodes": n})
        c = _curve_from_args(a).reparametrize_by_arclength()
        states.append(SheetState.from_gamma(c, _gamma_from_args(a, c), args.rho_plus, args.rho_minus))
    ref = states[-1]
    fh, w = _writer(out / "convergence.csv")
    with fh:
        w.writerow(["n_nodes", "W_error", "E_A_term", "E_kappa_term"])
        for s in states:
            Wref = trig_interpolate(ref.W, s.curve.alpha)
            rep = energy_E(s.curve, s.velocity(), s.rho_plus, s.rho_minus, 2, E0=float("nan"))
            w.writerow([s.n, _r(np.max(np.abs(s.W - Wref))), _r(rep.E_A_term), _r(rep.E_kappa_term)])
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "dispersion": cmd_dispersion,
    "operators": cmd_operators,
    "pressure-test": cmd_pressure_test,
    "energy": cmd_energy,
    "convergence": cmd_convergence,
}


def build_parser():
    p = argparse.ArgumentParser(prog="interface-lab", description="Two-fluid interface numerics.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, preset="circle"):
        sp.add_argument("--output-dir", default="out")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--rho-plus", type=float, default=1.0)
        sp.add_argument("--rho-minus", type=float, default=1.0)
        sp.add_argument("--preset", default=preset)
        sp.add_argument("--radius", type=float, default=1.0)
        sp.add_argument("--n-nodes", type=int, default=128)
        sp.add_argument("--gamma", default="zero")

    s = sub.add_parser("simulate")
    s.add_argument("--config")
    s.add_argument("--manifest", help="replay the configuration stored in a manifest.json")
    s.add_argument("--output-dir", default="out")
    s.add_argument("overrides", nargs="*", help="extra key=value settings")
    s = sub.add_parser("dispersion")
    common(s)
    s.add_argument("--slip", type=float, default=0.0)
    s.add_argument("--modes", default="1..32")
    s.add_argument("--geometry", choices=("circle", "flat"), default="circle")
    s = sub.add_parser("operators")
    common(s)
    s.add_argument("--modes", default="1..16")
    common(sub.add_parser("pressure-test"), "ellipse")
    s = sub.add_parser("energy")
    common(s, "perturbed:0.1,3")
    s.add_argument("--k", type=int, default=2)
    s = sub.add_parser("convergence")
    common(s, "ellipse")
    s.set_defaults(n_nodes=32)
    s.add_argument("--levels", type=int, default=4)
    return p


def _thread_limit():
    n = os.environ.get("INTERFACE_LAB_THREADS")
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        with _thread_limit():
            return COMMANDS[args.command](args, out)
    except (ConfigError, ContractError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InterfaceLabError, np.linalg.LinAlgError, FloatingPointError) as exc:
        (out / "failure.txt").write_text(f"{type(exc).__name__}: {exc}\n\n{traceback.format_exc()}")
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
