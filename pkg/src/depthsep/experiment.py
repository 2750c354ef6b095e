"""Width sweeps of trained 2-layer networks against a radial target under mu.

Training is plain minibatch SGD on the squared loss with a two-phase step
size (constant, then ``1/sqrt(t)`` decay) and gradient-norm clipping.  Each
width is trained from ``restarts`` initialisations; the one with the lowest
held-out loss is kept.  All widths are scored on one shared evaluation
sample so the curve is comparable point to point.

This only ever gives upper bounds on the best 2-layer error; it says nothing
about the worst case.
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from .netbuild import RELU, TwoLayerNet, eval_two_layer
from .radial import RadialDensity, build_density, sample_mu

log = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "SweepRow",
    "l2mu_error",
    "train_two_layer",
    "width_sweep",
    "sweep_csv",
    "write_sweep_csv",
    "sweep_svg",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("width", "train_loss", "eval_error", "std_err", "restarts", "seconds")


@dataclass(frozen=True)
class TrainConfig:
    d: int = 3
    width: int = 1
    n_train: int = 20_000
    n_eval: int = 20_000
    steps: int = 6000
    step_size: float = 0.05
    decay_start: float = 0.5      # fraction of steps run at the constant step size
    restarts: int = 8
    batch_size: int = 64
    seed: int = 0
    activation: str = "relu"
    clip: float = 10.0
    val_fraction: float = 0.2
    tail_tol: float = 1e-3
    record_every: int = 100
    threads: int = 1

    def __post_init__(self):
        for name in ("d", "width", "n_train", "n_eval", "steps", "restarts", "batch_size",
                     "record_every", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_eval < 10_000:
            raise ValueError("n_eval must be >= 10000")
        if self.activation != "relu":
            raise ValueError("only relu networks are trainable")
        if not (0.0 < self.val_fraction < 1.0 and 0.0 <= self.decay_start <= 1.0):
            raise ValueError("val_fraction in (0,1) and decay_start in [0,1] required")
        if not (self.step_size > 0 and self.clip > 0):
            raise ValueError("step_size and clip must be > 0")


@dataclass(frozen=True)
class SweepRow:
    width: int
    best_train_loss: float
    eval_l2mu_error: float
    eval_std_error: float
    restarts_used: int
    wall_time: float

    def __post_init__(self):
        if not self.eval_l2mu_error >= 0:
            raise ValueError("eval error must be >= 0")


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# stream tags
_TRAIN, _EVAL, _INIT, _BATCH, _L2 = 1, 2, 3, 4, 5


def l2mu_error(f: Callable, g: Callable, n_eval: int, seed: int,
               density: RadialDensity, points: np.ndarray | None = None):
    """Monte Carlo mean and standard error of ``(f - g)^2`` under ``mu``."""
    if points is None:
        points = sample_mu(density, _stream(seed, _L2), n_eval)
    diff2 = (np.asarray(f(points), dtype=float) - np.asarray(g(points), dtype=float)) ** 2
    mean = float(diff2.mean())
    se = float(diff2.std(ddof=1) / math.sqrt(diff2.size)) if diff2.size > 1 else 0.0
    return mean, se


def _init(rng, k: int, d: int):
    W = rng.standard_normal((k, d)) / math.sqrt(d)
    b = 0.1 * rng.standard_normal(k)
    v = np.zeros(k)       # zero output layer: the net starts at f = 0
    return W, b, v


def _loss(W, b, v, X, y):
    r = np.maximum(X @ W.T + b, 0.0) @ v - y
    return float(np.mean(r * r))


def _sgd(X, y, Xv, yv, cfg: TrainConfig, rng_init, rng_batch):
    """One SGD run; returns params, best-so-far train-loss trace and val loss.

    Returns None if the run diverges (non-finite gradient or loss).
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _sgd_run(X, y, Xv, yv, cfg, rng_init, rng_batch)


def _sgd_run(X, y, Xv, yv, cfg, rng_init, rng_batch):
    W, b, v = _init(rng_init, cfg.width, cfg.d)
    n = X.shape[0]
    t0 = int(cfg.decay_start * cfg.steps)
    trace, best = [], math.inf
    idx_all = rng_batch.integers(0, n, size=(cfg.steps, cfg.batch_size))
    for t in range(cfg.steps):
        idx = idx_all[t]
        xb, yb = X[idx], y[idx]
        pre = xb @ W.T + b
        h = np.maximum(pre, 0.0)
        r = h @ v - yb
        g = 2.0 / cfg.batch_size
        gv = g * (h.T @ r)
        gpre = g * (r[:, None] * v) * (pre > 0)
        gW = gpre.T @ xb
        gb = gpre.sum(axis=0)
        norm = math.sqrt(float((gW * gW).sum() + (gb * gb).sum() + (gv * gv).sum()))
        if not math.isfinite(norm):
            return None
        scale = min(1.0, cfg.clip / norm) if norm > 0 else 1.0
        eta = cfg.step_size if t < t0 else cfg.step_size / math.sqrt(1.0 + t - t0)
        W -= eta * scale * gW
        b -= eta * scale * gb
        v -= eta * scale * gv
        if (t + 1) % cfg.record_every == 0 or t + 1 == cfg.steps:
            cur = _loss(W, b, v, X, y)
            if not math.isfinite(cur):
                return None
            best = min(best, cur)
            trace.append(best)
    val = _loss(W, b, v, Xv, yv)
    if not math.isfinite(val):
        return None
    return (W, b, v), trace, val


def train_two_layer(target: Callable, cfg: TrainConfig,
                    density: RadialDensity | None = None,
                    eval_points: np.ndarray | None = None,
                    train_data: tuple[np.ndarray, np.ndarray] | None = None):
    """Train a width-``cfg.width`` 2-layer ReLU net on samples of ``mu``.

    Returns the best net (by held-out loss over restarts) and its
    :class:`SweepRow`.  Diverged runs consume a restart and are logged.
    """
    start = time.perf_counter()
    density = density or build_density(cfg.d, cfg.tail_tol)
    if train_data is None:
        X = sample_mu(density, _stream(cfg.seed, _TRAIN), cfg.n_train)
        y = np.asarray(target(X), dtype=float)
    else:
        X, y = train_data
    n_val = max(1, int(round(cfg.val_fraction * X.shape[0])))
    Xt, yt, Xv, yv = X[n_val:], y[n_val:], X[:n_val], y[:n_val]

    def run(k):
        res = _sgd(Xt, yt, Xv, yv, cfg, _stream(cfg.seed, _INIT, cfg.width, k),
                   _stream(cfg.seed, _BATCH, cfg.width, k))
        if res is None:
            log.warning("width %d restart %d diverged", cfg.width, k)
        return res

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, range(cfg.restarts)))
    else:
        results = [run(k) for k in range(cfg.restarts)]
    ok = [(res[2], k, res) for k, res in enumerate(results) if res is not None]
    if ok:
        _, k_best, (params, trace, _) = min(ok, key=lambda t: (t[0], t[1]))
        W, b, v = params
        train_loss = trace[-1]
    else:
        log.warning("width %d: every restart diverged; reporting the zero net", cfg.width)
        W, b, v = _init(_stream(cfg.seed, _INIT, cfg.width, 0), cfg.width, cfg.d)
        train_loss = _loss(W, b, v, Xt, yt)
    net = TwoLayerNet(W, b, v, RELU)
    if eval_points is None:
        eval_points = sample_mu(density, _stream(cfg.seed, _EVAL), cfg.n_eval)
    err, se = l2mu_error(lambda p: eval_two_layer(net, p), target, cfg.n_eval,
                         cfg.seed, density, eval_points)
    row = SweepRow(cfg.width, float(train_loss), err, se, cfg.restarts,
                   time.perf_counter() - start)
    return net, row


def _checksum(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a, dtype="<f8").tobytes()).hexdigest()[:16]


def width_sweep(target: Callable, widths, base_cfg: TrainConfig,
                density: RadialDensity | None = None):
    """Train one net per width on shared train/eval samples.

    Returns ``(rows, meta)``; ``meta`` records the sample checksums.
    """
    widths = list(widths)
    density = density or build_density(base_cfg.d, base_cfg.tail_tol)
    X = sample_mu(density, _stream(base_cfg.seed, _TRAIN), base_cfg.n_train)
    y = np.asarray(target(X), dtype=float)
    E = sample_mu(density, _stream(base_cfg.seed, _EVAL), base_cfg.n_eval)
    meta = {"eval_checksum": _checksum(E), "train_checksum": _checksum(X),
            "r_max": repr(density.r_max), "tail_bound": repr(density.tail_bound)}
    rows = []
    for k in widths:
        _, row = train_two_layer(target, replace(base_cfg, width=int(k)), density, E, (X, y))
        log.info("width %d: eval error %.4g +- %.2g", row.width, row.eval_l2mu_error,
                 row.eval_std_error)
        rows.append(row)
    return rows, meta


def sweep_csv(rows, cfg: TrainConfig, meta: dict | None = None, target_id: str = "",
              deterministic: bool = True) -> str:
    """CSV text: ``# key=value`` header lines, then one row per width.

    With ``deterministic`` the seconds column holds ``nan`` so reruns are
    byte-identical.
    """
    lines = []
    conf = asdict(cfg)
    conf.pop("width")
    conf.pop("threads")
    for k, v in [("target", target_id), *sorted(conf.items()), *sorted((meta or {}).items())]:
        lines.append(f"# {k}={v}")
    lines.append(",".join(CSV_COLUMNS))
    for r in rows:
        secs = "nan" if deterministic else f"{r.wall_time:.3f}"
        lines.append(f"{r.width},{r.best_train_loss!r},{r.eval_l2mu_error!r},"
                     f"{r.eval_std_error!r},{r.restarts_used},{secs}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(path, rows, cfg, meta=None, target_id="", deterministic=True) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(sweep_csv(rows, cfg, meta, target_id, deterministic))


def sweep_svg(rows, title: str = "eval error vs width") -> str:
    """A minimal line chart: width on a log2 axis, eval error on a linear axis."""
    W, H, pad = 480, 320, 50
    if not rows:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}"></svg>\n'
    xs = [math.log2(r.width) for r in rows]
    ys = [r.eval_l2mu_error for r in rows]
    x0, x1 = min(xs), max(xs) if max(xs) > min(xs) else min(xs) + 1
    y1 = max(ys) * 1.1 if max(ys) > 0 else 1.0

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (W - 2 * pad)

    def py(y):
        return H - pad - y / y1 * (H - 2 * pad)

    pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
           f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
           f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{pts}"/>']
    for r, x, y in zip(rows, xs, ys):
        out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="steelblue"/>')
        out.append(f'<text x="{px(x):.1f}" y="{H - pad + 15}" text-anchor="middle" '
                   f'font-size="10">{r.width}</text>')
    out.append(f'<text x="{pad - 5}" y="{pad}" text-anchor="end" font-size="10">{y1:.3g}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="11">width (log scale)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
