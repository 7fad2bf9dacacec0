"""Command-line front end.

Every subcommand writes its CSV files and a ``manifest.json`` into ``--out``
and prints a short summary. Settings come from, in increasing priority: the
``--scale`` preset, a ``--config`` file of ``key = value`` lines, and flags.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, dense, experiments
from .engine import SCALES, SimConfig
from .errors import ConfigError
from .geometry import Architecture
from .strategies import Strategy

log = logging.getLogger("coopnet")

SIM_KEYS = {"arch", "strategy", "protocol", "m", "alpha", "nu", "slots", "iters", "reps", "seed",
            "scale", "grid", "workers"}


# -- config ---------------------------------------------------------------------

def read_config_file(path) -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, step = (float(s) for s in text.split(":"))
            n = int(round((b - a) / step)) + 1
            return [round(a + k * step, 10) for k in range(n)]
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None


def merged_settings(args) -> dict:
    settings = {}
    if args.config:
        try:
            settings.update(read_config_file(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    for key, value in vars(args).items():
        if key not in ("command", "config", "func") and value is not None:
            settings[key] = value
    return settings


def build_config(settings: dict, **forced) -> SimConfig:
    s = {**settings, **{k: v for k, v in forced.items() if v is not None}}
    unknown = set(s) - SIM_KEYS - {"out", "x", "rings", "width", "radius", "k", "max_iters", "tol"}
    if unknown:
        raise ConfigError(f"unknown setting(s): {', '.join(sorted(unknown))}")
    scale = s.get("scale", "desk")
    if scale not in SCALES:
        raise ConfigError(f"unknown scale {scale!r}")
    kw = dict(SCALES[scale])
    conv = {"m": int, "slots": int, "iters": int, "reps": int, "seed": int,
            "alpha": float, "nu": float}
    try:
        for key, fn in conv.items():
            if key in s:
                kw[key] = fn(s[key])
        if "arch" in s:
            kw["architecture"] = Architecture(str(s["arch"]).lower())
        if "strategy" in s:
            kw["strategy"] = Strategy(str(s["strategy"]).lower())
        if "protocol" in s:
            kw["protocol"] = str(s["protocol"]).lower()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return SimConfig(**kw)


# -- output ---------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_atomic(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Outputs:
    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.files: dict[str, str] = {}

    def csv(self, name: str, header: list[str], rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        data = buf.getvalue().encode()
        write_atomic(self.dir / name, data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def manifest(self, command: str, config: dict, seed, started: float, extra: dict | None = None):
        doc = {
            "tool": "coopnet",
            "version": __version__,
            "command": command,
            "seed": seed,
            "config": config,
            "duration_s": round(time.time() - started, 3),
            "outputs": [{"file": k, "sha256": v} for k, v in sorted(self.files.items())],
        }
        if extra:
            doc["metadata"] = extra
        write_atomic(self.dir / "manifest.json", (json.dumps(doc, indent=2) + "\n").encode())


def print_table(header, rows):
    widths = [max(len(str(h)), *(len(f"{r[i]:.5f}" if isinstance(r[i], float) else str(r[i]))
                                 for r in rows)) for i, h in enumerate(header)]
    print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join((f"{v:.5f}" if isinstance(v, float) else str(v)).ljust(w)
                        for v, w in zip(r, widths)))


def _report_outputs(out: Outputs, reports):
    out.csv("table.csv", ["strategy", "mean_energy", "std_energy"],
            [(r.strategy.name, r.mean_energy, r.std_energy) for r in reports])
    out.csv("radial.csv", ["strategy", "bin_center", "mean_energy"],
            [(r.strategy.name, c, v) for r in reports for c, v in r.radial])
    out.csv("dynamics.csv", ["strategy", "iteration", "coop_fraction"],
            [(r.strategy.name, n, f) for r in reports for n, f in r.coop_fraction])
    print_table(["strategy", "mean", "std"],
                [(r.strategy.name, r.mean_energy, r.std_energy) for r in reports])


def _require_arch(settings, arch: str):
    given = str(settings.get("arch", arch)).lower()
    if given != arch:
        raise ConfigError(f"this command runs on the {arch} architecture, got --arch {given}")
    return arch


def _runner(settings):
    workers = settings.get("workers")
    return experiments.Runner(workers=int(workers) if workers is not None else None)


# -- commands -------------------------------------------------------------------

def cmd_simulate(args, settings, out):
    cfg = build_config(settings)
    strategies = [Strategy.DEF] + ([cfg.strategy] if cfg.strategy is not Strategy.DEF else [])
    reports = experiments.run_table(cfg.architecture, strategies, cfg, runner=_runner(settings))
    _report_outputs(out, reports)
    return cfg, {"strategies": [r.strategy.value for r in reports]}


def cmd_table1(args, settings, out):
    cfg = build_config(settings, arch=_require_arch(settings, "adhoc"))
    reports = experiments.run_table(Architecture.ADHOC, ["def", "coop", "tft", "wsls"], cfg,
                                    runner=_runner(settings))
    _report_outputs(out, reports)
    return cfg, {"strategies": [r.strategy.value for r in reports]}


def cmd_table2(args, settings, out):
    cfg = build_config(settings, arch=_require_arch(settings, "central"))
    grid = parse_grid(str(settings["grid"])) if "grid" in settings else list(experiments.DEFAULT_GRID)
    reports = experiments.run_table(Architecture.CENTRAL, ["def", "coop", "minimal", "tft", "wsls"],
                                    cfg, r0_grid=grid, runner=_runner(settings))
    _report_outputs(out, reports)
    pred = experiments.minimal_prediction(cfg.alpha)
    print(f"MINIMAL dense-limit prediction: {pred:.5f}")
    notes = {r.strategy.name: r.note for r in reports if r.note}
    return cfg, {"strategies": [r.strategy.value for r in reports], "row_notes": notes,
                 "minimal_dense_prediction": pred}


def cmd_sweep_nu(args, settings, out):
    cfg = build_config(settings)
    grid = parse_grid(str(settings["grid"])) if "grid" in settings else list(experiments.DEFAULT_GRID)
    rows = experiments.sweep_nu(cfg.architecture, cfg.strategy, grid, cfg, runner=_runner(settings))
    out.csv("sweep_nu.csv", ["nu", "total_energy"], rows)
    print_table(["nu", "total_energy"], rows)
    print(f"argmin nu = {experiments.argmin(rows):g}")
    return cfg, {"argmin_nu": experiments.argmin(rows)}


def cmd_sweep_r0(args, settings, out):
    cfg = build_config(settings, arch=_require_arch(settings, "central"),
                       strategy=settings.get("strategy", "tft"))
    grid = parse_grid(str(settings["grid"])) if "grid" in settings else list(experiments.DEFAULT_GRID)
    rows = experiments.sweep_initial_cooperator(grid, cfg, cfg.strategy, runner=_runner(settings))
    out.csv("sweep_r0.csv", ["r0", "total_energy"], rows)
    print_table(["r0", "total_energy"], rows)
    print(f"argmin r0 = {experiments.argmin(rows):g}")
    return cfg, {"argmin_r0": experiments.argmin(rows)}


def cmd_dynamics(args, settings, out):
    cfg = build_config(settings, strategy=settings.get("strategy", "tft"))
    res = experiments.cooperation_dynamics(cfg.strategy, cfg.architecture, cfg, runner=_runner(settings))
    frac = res.coop_fraction
    out.csv("dynamics.csv", ["strategy", "iteration", "coop_fraction"],
            [(cfg.strategy.name, n, f) for n, f in enumerate(frac.tolist())])
    med = float(np.median(res.final_fraction))
    print(f"{cfg.strategy.name} {cfg.architecture.value}: final fraction {frac[-1]:.4f}, "
          f"median over replications {med:.4f}")
    return cfg, {"median_final_fraction": med}


def _dense_params(settings, default_alpha=4.0):
    try:
        alpha = float(settings.get("alpha", default_alpha))
        return alpha
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_dense_qmin(args, settings, out):
    alpha = _dense_params(settings)
    x = float(settings.get("x", 1.0))
    if not x > 0 or not alpha > 1:
        raise ConfigError("need x > 0 and alpha > 1")
    y, q = dense.q_min(x, alpha)
    out.csv("qmin.csv", ["x", "alpha", "y_star", "q"], [(x, alpha, y, q)])
    print(f"y*={y:.10g} q={q:.10g}")
    return {"x": x, "alpha": alpha}, {}


def cmd_dense_emin(args, settings, out):
    try:
        params = dense.DenseParams(radius=float(settings.get("radius", 1.0)),
                                   alpha=_dense_params(settings), k=float(settings.get("k", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    e = dense.minimal_total_energy(params)
    closed = dense.minimal_total_energy_closed(params)
    out.csv("emin.csv", ["alpha", "radius", "k", "e_min", "e_min_homogeneity"],
            [(params.alpha, params.radius, params.k, e, closed)])
    print(f"E_min={e:.10g} (homogeneity check {closed:.10g})")
    return {"radius": params.radius, "alpha": params.alpha, "k": params.k}, {}


def cmd_dense_balance(args, settings, out):
    try:
        model = dense.RingModel(int(settings.get("rings", 10)), float(settings.get("width", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    alpha = _dense_params(settings, 2.0)
    if not alpha > 1:
        raise ConfigError("alpha must exceed 1")
    res = dense.balance_optimize(model, alpha, max_iters=int(settings.get("max_iters", 50000)),
                                 tol=float(settings.get("tol", 1e-10)))
    n = model.n
    out.csv("dense_balance.csv", ["i", "j", "p_ij"],
            [(i + 1, j, res.p[i, j]) for i in range(n) for j in range(i + 1)])
    energy = dense.ring_energy_profile(model, res.p, alpha)
    out.csv("ring_energy.csv", ["i", "E_i"], [(i + 1, e) for i, e in enumerate(energy)])
    mt = dense.mean_and_variance(model, dense.min_total_assignment(model, alpha), alpha)
    print_table(["distribution", "mean", "variance"],
                [("balanced", res.mean, res.variance), ("min-total", mt[0], mt[1])])
    print(f"converged={res.converged} iterations={res.iterations}")
    return ({"rings": n, "width": model.width, "alpha": alpha},
            {"converged": res.converged, "iterations": res.iterations, "variance": res.variance})


COMMANDS = {
    "simulate": (cmd_simulate, "run one strategy against the DEF baseline"),
    "table1": (cmd_table1, "ad hoc network: DEF, COOP, TFT, WSLS"),
    "table2": (cmd_table2, "central sink: DEF, COOP, MINIMAL, TFT (best r0), WSLS"),
    "sweep-nu": (cmd_sweep_nu, "energy against the relay-request fraction nu"),
    "sweep-r0": (cmd_sweep_r0, "energy against the initial cooperator's radius"),
    "dynamics": (cmd_dynamics, "cooperator fraction per iteration"),
    "dense-qmin": (cmd_dense_qmin, "optimal relay radius and energy density"),
    "dense-emin": (cmd_dense_emin, "minimal total energy of the dense network"),
    "dense-balance": (cmd_dense_balance, "variance-minimising ring distribution"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"coopnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_, argument_default=None)
        p.set_defaults(func=func)
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("--out", help="output directory (default: out/<command>)")
        if name.startswith("dense"):
            p.add_argument("--alpha", type=float)
            if name == "dense-qmin":
                p.add_argument("--x", type=float)
            elif name == "dense-emin":
                p.add_argument("--radius", type=float)
                p.add_argument("--k", type=float)
            else:
                p.add_argument("--rings", type=int)
                p.add_argument("--width", type=float)
                p.add_argument("--max-iters", dest="max_iters", type=int)
                p.add_argument("--tol", type=float)
            continue
        p.add_argument("--arch", choices=[a.value for a in Architecture])
        p.add_argument("--strategy", choices=[s.value for s in Strategy])
        p.add_argument("--protocol", choices=["p1", "p2"])
        p.add_argument("--m", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--slots", type=int)
        p.add_argument("--iters", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--scale", choices=sorted(SCALES))
        p.add_argument("--workers", type=int, help="replication workers (default COOPNET_WORKERS)")
        if name in ("sweep-nu", "sweep-r0", "table2"):
            p.add_argument("--grid", help="start:stop:step or comma list")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.time()
    try:
        settings = merged_settings(args)
        out = Outputs(settings.pop("out", None) or Path("out") / args.command)
        cfg, extra = args.func(args, settings, out)
        snapshot = cfg.snapshot() if isinstance(cfg, SimConfig) else cfg
        out.manifest(args.command, snapshot, snapshot.get("seed"), started, extra)
    except ConfigError as exc:
        print(f"coopnet {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.exception("run failed")
        print(f"coopnet {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
