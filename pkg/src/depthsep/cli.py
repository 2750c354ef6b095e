"""Command-line front end.

    depthsep verify [--only ID ...]
    depthsep build
    depthsep sweep
    depthsep sample
    depthsep eval

Common flags: ``--config PATH`` (``key = value`` lines, ``#`` comments),
``--seed``, ``--out DIR``, ``--threads N`` and ``--set key=value``.
Exit codes: 0 success, 1 a hard check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

log = logging.getLogger("depthsep")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None
    if any(v < 1 for v in vals):
        raise ConfigError("list entries must be positive")
    return vals


def _opt_int(text: str):
    return None if text.lower() in ("", "none", "default") else int(text)


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    d: int = 4
    alpha: float = 25.0
    N: int | None = None
    seed: int = 0
    trials: int = 64
    delta: float = 0.05
    n_mc: int = 100_000
    tail_tol: float = 1e-3
    rel_tol_1d: float = 1e-4
    rel_tol_2d: float = 1e-3
    nodes_per_wavelength: int = 24
    out: str = "out"
    threads: int = 1
    activation: str = "relu"
    # sweep
    widths: tuple[int, ...] = (1, 2, 4, 8, 16)
    target: str = "net"
    target_file: str = ""
    hard_file: str = ""
    steps: int = 6000
    restarts: int = 8
    n_train: int = 20_000
    n_eval: int = 20_000
    step_size: float = 0.05
    batch_size: int = 64
    deterministic: bool = True
    svg: bool = True
    # sample / eval
    n_samples: int = 10_000
    net_file: str = ""
    points_file: str = ""

    def validate(self) -> "RunConfig":
        if self.d < 2:
            raise ConfigError("d must be >= 2")
        if self.alpha < 1:
            raise ConfigError("alpha must be >= 1")
        if self.N is not None and self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in ("trials", "n_mc", "threads", "steps", "restarts", "n_train",
                     "batch_size", "n_samples", "nodes_per_wavelength"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.nodes_per_wavelength < 20:
            raise ConfigError("nodes_per_wavelength must be >= 20")
        if self.n_eval < 10_000:
            raise ConfigError("n_eval must be >= 10000")
        if not self.delta > 0 or not self.step_size > 0:
            raise ConfigError("delta and step_size must be > 0")
        if not 0 < self.tail_tol <= 0.01:
            raise ConfigError("tail_tol must lie in (0, 0.01]")
        for name in ("rel_tol_1d", "rel_tol_2d"):
            if not 0 < getattr(self, name) <= 1e-2:
                raise ConfigError(f"{name} must lie in (0, 1e-2]")
        if self.target not in ("net", "gtilde", "surrogate"):
            raise ConfigError("target must be net, gtilde or surrogate")
        if self.activation not in ("relu", "threshold"):
            raise ConfigError("activation must be relu or threshold")
        return self


_PARSERS = {
    "int": int, "float": float, "str": str, "bool": _bool,
    "int | None": _opt_int, "tuple[int, ...]": _int_list,
}


def _parse_value(fld, text: str):
    parser = _PARSERS[fld.type if isinstance(fld.type, str) else fld.type.__name__]
    try:
        return parser(text)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"bad value for {fld.name}: {text!r}") from None


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    known = {f.name: f for f in fields(RunConfig)}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _parse_value(known[key], val)
    return replace(base or RunConfig(), **updates)


def apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    return parse_config_text("\n".join(pairs or []), cfg)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _suite_config(cfg: RunConfig):
    from .verify import SuiteConfig

    return SuiteConfig(d=cfg.d, alpha=cfg.alpha, N=cfg.N, seed=cfg.seed, trials=cfg.trials,
                       delta=cfg.delta, n_mc=cfg.n_mc, tail_tol=cfg.tail_tol,
                       rel_tol_1d=cfg.rel_tol_1d, rel_tol_2d=cfg.rel_tol_2d,
                       nodes_per_wavelength=cfg.nodes_per_wavelength,
                       activation=cfg.activation)


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _resolve_in(cfg: RunConfig, path: str, default: str) -> str:
    """Input files default to the output directory of a previous run."""
    return path or os.path.join(cfg.out, default)


def cmd_verify(cfg: RunConfig, only=None) -> int:
    from .verify import reports_to_csv, run_suite, summary_lines

    reports = run_suite(_suite_config(cfg), only=only, threads=cfg.threads)
    with open(_out_path(cfg, "verify_reports.csv"), "w", newline="") as fh:
        reports_to_csv(reports, fh)
    for line in summary_lines(reports):
        print(line)
    failed = [r for r in reports if r.verdict == "fail"]
    print(f"{len(reports)} reports, {len(failed)} hard failures")
    return EXIT_FAIL if failed else EXIT_OK


def _build_hard(cfg: RunConfig):
    from .verify import SuiteContext

    ctx = SuiteContext(_suite_config(cfg))
    return ctx.hard


def cmd_build(cfg: RunConfig) -> int:
    from .netbuild import activation, build_prop_approx, dumps_net

    h = _build_hard(cfg)
    act = activation(cfg.activation)
    try:
        net = build_prop_approx(h, cfg.delta, act)
    except ValueError as exc:
        raise ConfigError(f"cannot compile the network: {exc}") from None
    with open(_out_path(cfg, "hard_function.txt"), "w") as fh:
        fh.write(h.to_text())
    with open(_out_path(cfg, "network_3layer.txt"), "w") as fh:
        fh.write(dumps_net(net))
    f = h.family
    summary = [
        f"d={f.d}", f"alpha={f.alpha!r}", f"N={f.N}", f"seed={cfg.seed}",
        f"good_intervals={int(f.good.sum())}", f"high_freq_mass={h.signs.high_freq_mass!r}",
        f"surrogate_slope={h.surrogate_lipschitz!r}", f"delta={cfg.delta!r}",
        f"activation={act.kind}", f"first_layer_units={net.m1}",
        f"second_layer_units={net.m2}", f"width={net.width}",
    ]
    with open(_out_path(cfg, "build_summary.txt"), "w") as fh:
        fh.write("\n".join(summary) + "\n")
    print("\n".join(summary))
    return EXIT_OK


def _load_target(cfg: RunConfig):
    from .hardfn import HardFunction, eval_gtilde, eval_surrogate
    from .netbuild import eval_three_layer, loads_net

    if cfg.target == "net":
        path = _resolve_in(cfg, cfg.target_file, "network_3layer.txt")
        if not os.path.isfile(path):
            raise ConfigError(f"target file {path!r} not found (run build first)")
        with open(path) as fh:
            net = loads_net(fh.read())
        if net.d != cfg.d:
            raise ConfigError(f"target net has d={net.d}, config has d={cfg.d}")
        return (lambda X: eval_three_layer(net, X)), os.path.basename(path)
    path = _resolve_in(cfg, cfg.hard_file, "hard_function.txt")
    if not os.path.isfile(path):
        raise ConfigError(f"hard-function file {path!r} not found (run build first)")
    with open(path) as fh:
        h = HardFunction.from_text(fh.read())
    fn = eval_gtilde if cfg.target == "gtilde" else eval_surrogate
    return (lambda X: fn(h, X, points=True)), f"{cfg.target}:{os.path.basename(path)}"


def cmd_sweep(cfg: RunConfig) -> int:
    from .experiment import TrainConfig, sweep_svg, width_sweep, write_sweep_csv
    from .radial import build_density

    target, target_id = _load_target(cfg)
    tcfg = TrainConfig(d=cfg.d, n_train=cfg.n_train, n_eval=cfg.n_eval, steps=cfg.steps,
                       step_size=cfg.step_size, restarts=cfg.restarts,
                       batch_size=cfg.batch_size, seed=cfg.seed, tail_tol=cfg.tail_tol,
                       threads=cfg.threads)
    density = build_density(cfg.d, cfg.tail_tol)
    rows, meta = width_sweep(target, cfg.widths, tcfg, density)
    write_sweep_csv(_out_path(cfg, "sweep.csv"), rows, tcfg, meta, target_id, cfg.deterministic)
    if cfg.svg:
        with open(_out_path(cfg, "sweep.svg"), "w") as fh:
            fh.write(sweep_svg(rows))
    for r in rows:
        print(f"width={r.width:4d} eval_error={r.eval_l2mu_error:.6g} "
              f"+- {r.eval_std_error:.2g} train_loss={r.best_train_loss:.6g}")
    return EXIT_OK


def cmd_sample(cfg: RunConfig) -> int:
    from .radial import build_density, sample_mu, write_cdf_csv

    density = build_density(cfg.d, cfg.tail_tol)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    pts = sample_mu(density, rng, cfg.n_samples)
    with open(_out_path(cfg, "samples.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k}" for k in range(cfg.d)])
        for p in pts:
            w.writerow([repr(float(v)) for v in p])
    write_cdf_csv(density, _out_path(cfg, "cdf.csv"))
    print(f"wrote {cfg.n_samples} samples; r_max={density.r_max:.6g} "
          f"tail_bound={density.tail_bound:.3g}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig) -> int:
    from .netbuild import TwoLayerNet, eval_three_layer, eval_two_layer, loads_net

    net_path = _resolve_in(cfg, cfg.net_file, "network_3layer.txt")
    pts_path = _resolve_in(cfg, cfg.points_file, "samples.csv")
    for p in (net_path, pts_path):
        if not os.path.isfile(p):
            raise ConfigError(f"input file {p!r} not found")
    with open(net_path) as fh:
        net = loads_net(fh.read())
    try:
        pts = np.loadtxt(pts_path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"cannot read points: {exc}") from None
    if pts.shape[1] != net.d:
        raise ConfigError(f"points have dimension {pts.shape[1]}, net has {net.d}")
    out = eval_two_layer(net, pts) if isinstance(net, TwoLayerNet) else eval_three_layer(net, pts)
    with open(_out_path(cfg, "eval.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["output"])
        for v in np.atleast_1d(out):
            w.writerow([repr(float(v))])
    print(f"evaluated {pts.shape[0]} points")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="depthsep", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run the lemma-check suite")
    v.add_argument("--only", action="append", metavar="ID",
                   help="run only this check (repeatable)")
    sub.add_parser("build", parents=[common], help="build hard function and 3-layer net")
    sub.add_parser("sweep", parents=[common], help="train 2-layer nets over widths")
    sub.add_parser("sample", parents=[common], help="draw samples from mu")
    sub.add_parser("eval", parents=[common], help="evaluate a stored network")
    return p


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config_text(text, cfg)
    cfg = apply_overrides(cfg, args.set)
    flag = {k: getattr(args, k) for k in ("seed", "out", "threads") if getattr(args, k) is not None}
    return replace(cfg, **flag).validate()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.command == "verify":
            only = None
            if args.only:
                from .verify import normalize_check_id

                try:
                    only = [normalize_check_id(o) for o in args.only]
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
            return cmd_verify(cfg, only)
        return {"build": cmd_build, "sweep": cmd_sweep, "sample": cmd_sample,
                "eval": cmd_eval}[args.command](cfg)
    except ConfigError as exc:
        print(f"depthsep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
