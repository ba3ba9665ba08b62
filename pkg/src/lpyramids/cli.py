"""Command-line entry point: ``lpyramids {fit-extend,denoise,experiment}``.

Exit codes: 0 success, 2 usage error, 3 data error.

Every subcommand accepts ``--config FILE``, a flat ``key = value`` file whose
keys are option names (``sigma0``, ``max-levels``, ...). Command-line flags
override config values.
"""

import argparse
import configparser
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .csvio import (
    append_jsonl,
    read_matrix_csv,
    read_vector_csv,
    write_result,
    write_summary,
    write_table_csv,
)
from .errors import (
    DegenerateInput,
    DomainError,
    InvariantViolation,
    ParseError,
    ShapeError,
    UsageError,
)
from .experiments import run_circle, run_extrapolation, run_step_denoise
from .kernels import BandwidthSchedule, PointSet, RadialProfile
from .lp_core import lp_extend_many, lp_fit, stability_certificate
from .nl_denoise import PatchConfig, build_nl_kernel, denoise_iterate, extract_patches, truncated_lp_kernel

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

EXPERIMENTS = ("circle", "extrapolate", "step")


@dataclasses.dataclass
class RunConfig:
    """Resolved parameters of one CLI invocation (recorded in the run report)."""

    command: str
    out: str
    profile: str = "gaussian"
    tail_q: float | None = None
    tail_c: float = 1.0
    sigma0: float = 1.0
    mu: float = 2.0
    floor: float | None = None
    tol: float | None = None
    max_levels: int = 200
    patch_size: int = 3
    bandwidth_divisor: float = 3.0
    kernel_step: int = 1
    iters: int = 1
    trials: int = 500
    seed: int = 0
    threads: int | None = None
    inputs: dict = dataclasses.field(default_factory=dict)

    @classmethod
    def from_namespace(cls, ns):
        names = {f.name for f in dataclasses.fields(cls)}
        kw = {k: v for k, v in vars(ns).items() if k in names}
        inputs = {k: v for k, v in vars(ns).items() if k not in names and k not in ("config", "func")}
        return cls(**kw, inputs=inputs)

    def profile_obj(self, p):
        if self.profile == "gaussian":
            return RadialProfile.gaussian()
        if self.tail_q is None:
            raise UsageError("--profile power_law requires --tail-q")
        return RadialProfile.power_law(self.tail_q, self.tail_c, dim=p)

    def schedule_obj(self):
        if self.mu == 1.0:
            return BandwidthSchedule.constant(self.sigma0)
        if self.floor is not None:
            return BandwidthSchedule.plateaued(self.sigma0, self.mu, self.floor)
        return BandwidthSchedule.geometric(self.sigma0, self.mu)


def _common(p):
    p.add_argument("--config", help="flat key = value file of option defaults")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")


def _kernel_opts(p):
    p.add_argument("--profile", choices=("gaussian", "power_law"), default="gaussian")
    p.add_argument("--tail-q", type=float, default=None, help="power-law exponent q (> dimension)")
    p.add_argument("--tail-c", type=float, default=1.0, help="power-law constant C")
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=2.0, help="bandwidth decay factor (1 = constant)")
    p.add_argument("--floor", type=float, default=None, help="plateau bandwidth floor")


def build_parser():
    parser = argparse.ArgumentParser(prog="lpyramids", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fe = sub.add_parser("fit-extend", help="fit LP to samples and evaluate at query points")
    fe.add_argument("samples", help="n x p CSV of sample locations")
    fe.add_argument("values", help="n x 1 CSV of observed values")
    fe.add_argument("queries", help="q x p CSV of query locations")
    _kernel_opts(fe)
    fe.add_argument("--tol", type=float, default=None, help="absolute residual tolerance (default 1e-13*max|y|)")
    fe.add_argument("--max-levels", type=int, default=200)
    _common(fe)
    fe.set_defaults(func=cmd_fit_extend)

    dn = sub.add_parser("denoise", help="NL-means denoising with truncated LP kernels")
    dn.add_argument("signal", help="single-column CSV signal")
    dn.add_argument("--reference", default=None, help="clean signal CSV for error curves")
    dn.add_argument("--patch-size", type=int, default=3)
    dn.add_argument("--bandwidth-divisor", type=float, default=3.0)
    dn.add_argument("--kernel-step", type=int, default=1, help="K in Q_K = I - (I - Q)^K")
    dn.add_argument("--iters", type=int, default=1, help="number of applications L")
    dn.add_argument("--all-iterates", action="store_true", help="write every iterate, not just the last")
    _common(dn)
    dn.set_defaults(func=cmd_denoise)

    ex = sub.add_parser("experiment", help="run a built-in experiment")
    ex.add_argument("name", help="one of: " + ", ".join(EXPERIMENTS))
    ex.add_argument("--trials", type=int, default=500)
    ex.add_argument("--iters", type=int, default=50, help="max iterations for the step experiment")
    ex.add_argument("--grid-size", type=int, default=1000)
    ex.add_argument("--precision", type=float, default=1e-7)
    ex.add_argument("--sigma0-grid", default="0.25,0.5,1,2,4")
    ex.add_argument("--mu-grid", default="1.25,1.5,2,3,4")
    _common(ex)
    ex.set_defaults(func=cmd_experiment)
    return parser


def _load_config(path, subparser):
    cp = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in cp["run"].items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} in {path}")
        action = known[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            defaults[dest] = raw.strip()
    return defaults


def parse_args(argv):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if getattr(ns, "config", None):
        sub = parser._subparsers._group_actions[0].choices[ns.command]
        # string defaults pass through each option's type conversion
        sub.set_defaults(**_load_config(ns.config, sub))
        ns = parser.parse_args(argv)
    return ns


def _report_path(out):
    path = Path(out) / "report.jsonl"
    if path.exists():
        path.unlink()
    return path


def _config_record(cfg):
    rec = {"record": "config", "backend": _backend.BACKEND, "version": __version__}
    rec.update(dataclasses.asdict(cfg))
    return rec


def cmd_fit_extend(cfg):
    args = cfg.inputs
    X = read_matrix_csv(args["samples"])
    y = read_vector_csv(args["values"])
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"{X.shape[0]} samples but {y.shape[0]} values")
    ps = PointSet(X)
    Q = read_matrix_csv(args["queries"], ncols=ps.p)
    if Q.size == 0:
        Q = np.zeros((0, ps.p))
    model, report = lp_fit(ps, y, cfg.profile_obj(ps.p), cfg.schedule_obj(), cfg.tol, cfg.max_levels)
    values, underflow = lp_extend_many(model, Q, return_underflow=True)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(out / "extension.csv", {"value": values})
    rpath = _report_path(out)
    append_jsonl(rpath, _config_record(cfg))
    append_jsonl(rpath, {
        "record": "fit",
        "levels_used": report.levels_used,
        "n_levels": report.n_levels,
        "stop_reason": report.stop_reason.value,
        "residual_norms": report.residual_norms,
        "sigmas": model.sigmas,
        "underflowed_levels": int(np.sum(underflow)),
    })
    cert = stability_certificate(model)
    append_jsonl(rpath, {
        "record": "stability",
        "m": cert.m,
        "bound": cert.bound,
        "observed": cert.observed,
        "satisfied": cert.satisfied,
    })
    return values


def cmd_denoise(cfg):
    args = cfg.inputs
    y = read_vector_csv(args["signal"])
    ref = read_vector_csv(args["reference"]) if args.get("reference") else None
    if ref is not None and ref.shape != y.shape:
        raise ShapeError(f"reference has {ref.shape[0]} samples, signal has {y.shape[0]}")
    pcfg = PatchConfig(cfg.patch_size, bandwidth_divisor=cfg.bandwidth_divisor)
    Q = build_nl_kernel(extract_patches(y, pcfg), pcfg)
    trace = denoise_iterate(truncated_lp_kernel(Q, cfg.kernel_step), y, cfg.iters, ref, K=cfg.kernel_step)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.get("all_iterates"):
        cols = {f"iter_{k}": trace.iterates[k] for k in range(trace.L + 1)}
    else:
        cols = {"value": trace.iterates[-1]}
    write_table_csv(out / "denoised.csv", cols)
    if trace.errors is not None:
        write_table_csv(out / "errors.csv", {"iteration": np.arange(trace.L + 1), "error": trace.errors})
    rpath = _report_path(out)
    append_jsonl(rpath, _config_record(cfg))
    append_jsonl(rpath, {
        "record": "denoise",
        "kernel_degenerate": Q.degenerate,
        "errors": trace.errors,
    })
    return trace


def _float_list(text, flag):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag} must be a comma-separated list of numbers") from None
    if not vals:
        raise UsageError(f"{flag} must not be empty")
    return vals


def cmd_experiment(cfg):
    args = cfg.inputs
    name = args["name"]
    if name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    if name == "circle":
        results = [run_circle(v, args["grid_size"]) for v in ("geometric", "plateaued")]
    elif name == "extrapolate":
        results = [run_extrapolation(
            _float_list(args["sigma0_grid"], "--sigma0-grid"),
            _float_list(args["mu_grid"], "--mu-grid"),
            args["precision"],
        )]
    else:
        results = [run_step_denoise(cfg.trials, cfg.iters, cfg.seed, threads=cfg.threads)]

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        write_result(res, out)
    write_summary(out / "summary.json", {r.name: r.scalars for r in results})
    rpath = _report_path(out)
    append_jsonl(rpath, _config_record(cfg))
    return results


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parse_args(argv)
        cfg = RunConfig.from_namespace(ns)
        ns.func(cfg)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, DomainError) as exc:
        print(f"lpyramids: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ShapeError, DegenerateInput, InvariantViolation, OSError) as exc:
        print(f"lpyramids: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
