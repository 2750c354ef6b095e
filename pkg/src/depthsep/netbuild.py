"""Network types and constructive approximation.

Univariate approximators have the form ``h(x) = a + sum_i alpha_i sigma(beta_i x - gamma_i)``.
For ReLU the builder is piecewise-linear interpolation on a uniform grid;
for the threshold unit it is a staircase.

The radial compiler produces a 3-layer network
``sum_i u_i sigma(sum_j v_ij sigma(<w_ij, x> + b_ij) + c_i)`` approximating
``f(|x|)``: the first layer approximates ``sum_k min(x_k^2, R^2)`` one coordinate
at a time, the second layer applies an approximation of ``t -> f(sqrt t)``.
The inner weight matrix of such a net has rank one, and is stored factored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .radial import RadialProfile

__all__ = [
    "Activation",
    "RELU",
    "THRESHOLD",
    "activation",
    "UnivariateApproximator",
    "TwoLayerNet",
    "ThreeLayerNet",
    "relu_interpolant",
    "build_univariate_relu",
    "build_univariate_threshold",
    "radial_pieces",
    "build_radial_3layer",
    "build_prop_approx",
    "threelayer_width_bound",
    "prop_approx_width_bound",
    "eval_two_layer",
    "eval_three_layer",
    "univariate_sup_error",
    "dumps_net",
    "loads_net",
]


def _relu(x):
    return np.maximum(x, 0.0)


def _step(x):
    return (np.asarray(x) >= 0.0).astype(float)


@dataclass(frozen=True)
class Activation:
    """A scalar nonlinearity with its approximation constant ``c_sigma``.

    ``growth = (C, a)`` certifies ``|sigma(x)| <= C (1 + |x|^a)``.
    """

    kind: str
    fn: Callable = field(repr=False, compare=False)
    c_sigma: float = 1.0
    growth: tuple[float, float] = (1.0, 1.0)
    builder: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("relu", "threshold", "custom"):
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.c_sigma < 1:
            raise ValueError("c_sigma must be >= 1")

    def __call__(self, x):
        return self.fn(x)

    def check_growth(self, n: int = 20001, bound: float = 1e6) -> bool:
        x = np.linspace(-bound, bound, n)
        C, a = self.growth
        return bool(np.all(np.abs(self.fn(x)) <= C * (1.0 + np.abs(x) ** a) + 1e-12))

    def build(self, f, L, R, delta):
        if self.builder is not None:
            return self.builder(f, L, R, delta)
        if self.kind == "relu":
            return build_univariate_relu(f, L, R, delta)
        if self.kind == "threshold":
            return build_univariate_threshold(f, L, R, delta)
        raise ValueError("custom activations must supply a builder")


RELU = Activation("relu", _relu, 3.0, (1.0, 1.0))
THRESHOLD = Activation("threshold", _step, 2.0, (1.0, 0.0))


def activation(kind: str) -> Activation:
    try:
        return {"relu": RELU, "threshold": THRESHOLD}[kind]
    except KeyError:
        raise ValueError(f"no built-in activation {kind!r}") from None


# ---------------------------------------------------------------------------
# sums of shifted activations, evaluated fast
# ---------------------------------------------------------------------------


def _act_sum(x, w, b, coef, kind: str):
    """``sum_i coef_i sigma(w_i x + b_i)`` for scalar-input ReLU/threshold units.

    Sorting the switch points ``-b_i/w_i`` and taking prefix sums makes the
    cost ``O((n + m) log m)`` instead of ``O(n m)``.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    b = np.asarray(b, dtype=float)
    coef = np.asarray(coef, dtype=float)
    out = np.zeros(x.shape)
    zero = w == 0
    if zero.any():
        sig = _relu(b[zero]) if kind == "relu" else _step(b[zero])
        out += float(np.dot(coef[zero], sig))
    for sgn in (1, -1):
        sel = (w > 0) if sgn > 0 else (w < 0)
        if not sel.any():
            continue
        ws, bs, cs = w[sel], b[sel], coef[sel]
        t = -bs / ws
        order = np.argsort(t, kind="stable")
        t = t[order]
        if kind == "relu":
            A = np.concatenate([[0.0], np.cumsum((cs * ws)[order])])
            B = np.concatenate([[0.0], np.cumsum((cs * bs)[order])])
            if sgn > 0:
                n = np.searchsorted(t, x, side="left")    # units with t < x
                out += A[n] * x + B[n]
            else:
                n = np.searchsorted(t, x, side="right")   # units with t <= x are off
                out += (A[-1] - A[n]) * x + (B[-1] - B[n])
        else:
            # evaluate the sign of w x + b exactly where it matters
            C = np.concatenate([[0.0], np.cumsum(cs[order])])
            if sgn > 0:
                n = np.searchsorted(t, x, side="right")
                out += C[n]
            else:
                n = np.searchsorted(t, x, side="left")
                out += C[-1] - C[n]
    return out


# ---------------------------------------------------------------------------
# univariate approximators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnivariateApproximator:
    a: float
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)
    kind: str = "relu"

    @property
    def width(self) -> int:
        return int(self.alpha.size)

    @property
    def terms(self) -> list[tuple[float, float, float]]:
        return list(zip(self.alpha.tolist(), self.beta.tolist(), self.gamma.tolist()))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind in ("relu", "threshold"):
            out = self.a + _act_sum(x, self.beta, -self.gamma, self.alpha, self.kind)
        else:
            raise ValueError("custom-kind approximators need eval_with")
        return float(out) if out.ndim == 0 else out

    def eval_with(self, act: Activation, x):
        x = np.asarray(x, dtype=float)
        out = self.a + act(np.multiply.outer(x, self.beta) - self.gamma) @ self.alpha
        return out


def _as_vector_fn(f):
    def g(x):
        x = np.asarray(x, dtype=float)
        try:
            y = np.asarray(f(x), dtype=float)
            if y.shape == x.shape:
                return y
        except Exception:
            pass
        return np.array([float(f(v)) for v in x.ravel()]).reshape(x.shape)
    return g


MAX_UNITS = 50_000_000


def _check_budget(units: float) -> None:
    if units > MAX_UNITS:
        raise ValueError(f"construction needs about {units:.3g} units, above the "
                         f"budget of {MAX_UNITS}")


def relu_interpolant(knots, values, tol: float = 0.0) -> UnivariateApproximator:
    """ReLU sum equal to the piecewise-linear interpolant, constant outside the knots."""
    x = np.asarray(knots, dtype=float)
    v = np.asarray(values, dtype=float)
    if x.size == 0:
        return UnivariateApproximator(0.0, np.zeros(0), np.zeros(0), np.zeros(0))
    if x.size == 1:
        return UnivariateApproximator(float(v[0]), np.zeros(0), np.zeros(0), np.zeros(0))
    if np.any(np.diff(x) <= 0):
        raise ValueError("knots must be strictly increasing")
    slopes = np.diff(v) / np.diff(x)
    jumps = np.diff(np.concatenate([[0.0], slopes, [0.0]]))
    keep = np.abs(jumps) > tol
    return UnivariateApproximator(float(v[0]), jumps[keep], np.ones(keep.sum()), x[keep])


def build_univariate_relu(f, L: float, R: float, delta: float) -> UnivariateApproximator:
    """ReLU approximation of an L-Lipschitz ``f`` that is constant outside ``[-R, R]``.

    Interpolates at spacing ``delta/L`` (``2 delta/L`` when that is needed to
    stay within ``3RL/delta`` units; the interpolation error is ``L h/2``).
    All ``|alpha_i| <= 2L``.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if L < 0 or R < 0:
        raise ValueError("L and R must be >= 0")
    fv = _as_vector_fn(f)
    if R * L <= delta:
        # |f(x) - f(0)| <= L|x| <= delta on [-R, R], and f is constant beyond
        return UnivariateApproximator(float(fv(np.zeros(1))[0]), np.zeros(0),
                                      np.zeros(0), np.zeros(0))
    h = delta / L
    m = math.ceil(R / h)
    if 2 * m + 1 > 3.0 * R * L / delta:
        h = 2.0 * delta / L
        m = math.ceil(R / h)
    _check_budget(2 * m + 1)
    knots = h * np.arange(-m, m + 1)
    return relu_interpolant(knots, fv(knots))


def build_univariate_threshold(f, L: float, R: float, delta: float) -> UnivariateApproximator:
    """Staircase ``a + sum_i alpha_i 1{x >= gamma_i}`` with ``|f - h| <= delta/2``.

    Samples ``f`` at spacing ``delta/L`` from ``-R`` and puts each step midway
    between samples, so at most ``ceil(2RL/delta) <= 2RL/delta + 1`` steps.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    fv = _as_vector_fn(f)
    if R == 0 or L == 0:
        return UnivariateApproximator(float(fv(np.zeros(1))[0]), np.zeros(0),
                                      np.zeros(0), np.zeros(0), "threshold")
    h = delta / L
    M = math.ceil(2.0 * R / h)
    _check_budget(M)
    y = -R + h * np.arange(M + 1)
    vals = fv(y)
    heights = np.diff(vals)
    keep = heights != 0
    return UnivariateApproximator(float(vals[0]), heights[keep], np.ones(keep.sum()),
                                  (y[:-1] + 0.5 * h)[keep], "threshold")


def univariate_sup_error(f, h: UnivariateApproximator, L: float, R: float,
                         delta: float, act: Activation | None = None) -> float:
    """Max of ``|f - h|`` on a grid of spacing ``delta/(10 L)`` over ``[-1.1R, 1.1R]``."""
    fv = _as_vector_fn(f)
    span = 1.1 * R + delta
    step = delta / (10.0 * max(L, 1e-300))
    n = int(min(max(2 * span / step, 1000), 5_000_000))
    x = np.linspace(-span, span, n + 1)
    if h.kind == "threshold":
        # include both sides of every step
        x = np.sort(np.concatenate([x, h.gamma, np.nextafter(h.gamma, -np.inf)]))
    hv = h(x) if act is None else h.eval_with(act, x)
    return float(np.max(np.abs(fv(x) - hv)))


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoLayerNet:
    """``sum_i v_i sigma(<w_i, x> + b_i)``."""

    W: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    act: Activation = RELU

    @property
    def d(self) -> int:
        return int(self.W.shape[1])

    @property
    def width(self) -> int:
        return int(self.W.shape[0])

    @property
    def units(self):
        return [(float(v), w.copy(), float(b)) for v, w, b in zip(self.v, self.W, self.b)]


@dataclass(frozen=True)
class ThreeLayerNet:
    """``sum_i u_i sigma(sum_j V_ij sigma(<W1_j, x> + b1_j) + c_i)``.

    ``V`` is either dense (``V``) or the product ``left @ right``.
    """

    W1: np.ndarray = field(repr=False)
    b1: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    act: Activation = RELU
    V: np.ndarray | None = field(default=None, repr=False)
    left: np.ndarray | None = field(default=None, repr=False)
    right: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m1, m2 = self.W1.shape[0], self.c.size
        if self.V is None:
            if self.left is None or self.right is None:
                raise ValueError("need V or both factors")
            if self.left.shape[0] != m2 or self.right.shape[1] != m1 \
                    or self.left.shape[1] != self.right.shape[0]:
                raise ValueError("factor shapes do not match the layers")
        elif self.V.shape != (m2, m1):
            raise ValueError("V shape does not match the layers")

    @property
    def d(self) -> int:
        return int(self.W1.shape[1])

    @property
    def m1(self) -> int:
        return int(self.W1.shape[0])

    @property
    def m2(self) -> int:
        return int(self.c.size)

    @property
    def width(self) -> int:
        return max(self.m1, self.m2)

    def dense_V(self) -> np.ndarray:
        return self.V if self.V is not None else self.left @ self.right


def _as_points(x, d: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != d:
        raise ValueError(f"input dimension {x.shape[1]} does not match net dimension {d}")
    return x, single


def eval_two_layer(net: TwoLayerNet, x, chunk: int = 8192):
    X, single = _as_points(x, net.d)
    out = np.empty(X.shape[0])
    for k in range(0, X.shape[0], chunk):
        out[k:k + chunk] = net.act(X[k:k + chunk] @ net.W.T + net.b) @ net.v
    return float(out[0]) if single else out


def _fast_path(net: ThreeLayerNet) -> bool:
    return (net.act.kind in ("relu", "threshold") and net.V is None
            and net.left.shape[1] == 1
            and bool(np.all(np.count_nonzero(net.W1, axis=1) <= 1)))


def eval_three_layer(net: ThreeLayerNet, x, chunk: int = 2048, fast: bool | None = None):
    """Exact evaluation; uses sorted prefix sums when the structure allows it."""
    X, single = _as_points(x, net.d)
    use_fast = _fast_path(net) if fast is None else fast
    if use_fast:
        kind = net.act.kind
        r = net.right[0]
        z = np.zeros(X.shape[0])
        nz = np.count_nonzero(net.W1, axis=1) > 0
        # units with all-zero weights contribute a constant
        if (~nz).any():
            z += float(np.dot(r[~nz], net.act(net.b1[~nz])))
        coord = np.argmax(net.W1 != 0, axis=1)
        for k in range(net.d):
            sel = nz & (coord == k)
            if sel.any():
                z += _act_sum(X[:, k], net.W1[sel, k], net.b1[sel], r[sel], kind)
        out = _act_sum(z, net.left[:, 0], net.c, net.u, kind)
    else:
        V = net.dense_V()
        out = np.empty(X.shape[0])
        for k in range(0, X.shape[0], chunk):
            h1 = net.act(X[k:k + chunk] @ net.W1.T + net.b1)
            out[k:k + chunk] = net.act(h1 @ V.T + net.c) @ net.u
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# the radial compiler
# ---------------------------------------------------------------------------


def threelayer_width_bound(c_sigma: float, d: int, r: float, R: float, L: float,
                           delta: float) -> float:
    return 2.0 * c_sigma * d * d * R * R * L / (math.sqrt(r) * delta) + 1.0


def prop_approx_width_bound(c_sigma: float, alpha: float, N: int, d: int,
                            delta: float) -> float:
    return 8.0 * c_sigma * alpha ** 1.5 * N * d ** 2.75 / delta + 1.0


def _sqrt_profile_knots(f: RadialProfile, L: float, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Knots in ``t = r^2`` for interpolating ``t -> f(sqrt t)`` within ``tol``."""
    r0, r1 = f.support
    if f.linear_pieces:
        edges = f.edges()
        pieces = [edges[:1]]
        vals = f(edges)
        for a, b, fa, fb in zip(edges[:-1], edges[1:], vals[:-1], vals[1:]):
            B = abs(fb - fa) / (b - a)
            # interpolating A + B sqrt(t) linearly in t between a^2 and b^2
            # errs by B (b - a)^2 / (4 (a + b)) at most
            n = 1
            if B > 0:
                n = max(1, math.ceil((b - a) * math.sqrt(B / (4.0 * (2.0 * a) * tol))))
            pieces.append(np.linspace(a, b, n + 1)[1:])
        r = np.concatenate(pieces)
    else:
        Ls = L / (2.0 * math.sqrt(r0))
        h = 2.0 * tol / Ls
        n = max(1, math.ceil((r1 * r1 - r0 * r0) / h))
        _check_budget(n + 1)
        r = np.sqrt(np.linspace(r0 * r0, r1 * r1, n + 1))
    return r * r, f(r)


def radial_pieces(f: RadialProfile, L: float, delta: float, act: Activation = RELU,
                  d: int = 2) -> tuple[UnivariateApproximator, UnivariateApproximator]:
    """Univariate pieces ``(l, s)`` with ``s(sum_k l(x_k)) ~ f(|x|)``.

    ``l`` approximates ``min(x^2, R^2)`` to ``sqrt(r) delta/(d L)`` and ``s``
    approximates ``t -> f(sqrt t)`` to ``delta/4`` (ReLU) or ``delta/2``.
    """
    r, R = f.support
    if r < 1:
        raise ValueError("support must start at r >= 1")
    if not delta > 0 or L < 0:
        raise ValueError("need delta > 0 and L >= 0")
    if d < 1:
        raise ValueError("d must be >= 1")
    eps1 = math.sqrt(r) * delta / (d * max(L, 1e-300))
    if act.kind == "relu":
        # uniform knots with R on the grid; x^2 interpolation error is h^2/4
        n = math.ceil(R / (2.0 * math.sqrt(eps1)))
        _check_budget(2 * n + 1)
        knots = (R / n) * np.arange(-n, n + 1)
        lt = relu_interpolant(knots, np.minimum(knots * knots, R * R))
        tol_s = 0.25 * delta
        tk, tv = _sqrt_profile_knots(f, L, tol_s)
        st = relu_interpolant(tk, tv)
    else:
        lt = act.build(lambda x: np.minimum(x * x, R * R), 2.0 * R, R, eps1)
        Ls = L / (2.0 * math.sqrt(r))
        st = act.build(lambda t: f(np.sqrt(np.maximum(t, 0.0))), Ls, R * R, 0.5 * delta)
    return lt, st


def build_radial_3layer(f: RadialProfile, L: float, delta: float,
                        act: Activation = RELU, d: int = 2) -> ThreeLayerNet:
    """3-layer net ``g`` with ``sup_x |g(x) - f(|x|)| <= delta``.

    ``f`` is L-Lipschitz and supported on ``[r, R]`` with ``r >= 1``.
    """
    lt, st = radial_pieces(f, L, delta, act, d)
    m_l = lt.width
    W1 = np.zeros((d * m_l, d))
    b1 = np.empty(d * m_l)
    right = np.empty((1, d * m_l))
    for k in range(d):
        sl = slice(k * m_l, (k + 1) * m_l)
        W1[sl, k] = lt.beta
        b1[sl] = -lt.gamma
        right[0, sl] = lt.alpha
    a_l = d * lt.a
    left = st.beta[:, None].copy()
    c = st.beta * a_l - st.gamma
    u = st.alpha.copy()
    if st.a != 0.0:
        # constant term: a unit that sees nothing and fires at sigma(1)
        s1 = float(act(np.array(1.0)))
        if s1 == 0.0:
            raise ValueError("activation vanishes at 1; cannot fold the constant")
        left = np.vstack([left, [[0.0]]])
        c = np.append(c, 1.0)
        u = np.append(u, st.a / s1)
    return ThreeLayerNet(W1, b1, c, u, act, left=left, right=right)


def build_prop_approx(h, delta: float, act: Activation = RELU) -> ThreeLayerNet:
    """Compile the Lipschitz surrogate of a hard function into a 3-layer net."""
    from .hardfn import surrogate_profile

    prof = surrogate_profile(h)
    return build_radial_3layer(prof, h.surrogate_lipschitz, delta, act, h.family.d)


# ---------------------------------------------------------------------------
# plain-text serialisation with hexadecimal floats
# ---------------------------------------------------------------------------


def _hex_row(tag: str, *parts) -> str:
    vals = []
    for p in parts:
        for v in np.atleast_1d(np.asarray(p, dtype=float)):
            vals.append(float(v).hex())
    return tag + " " + " ".join(vals)


def dumps_net(net) -> str:
    lines = []
    if isinstance(net, TwoLayerNet):
        lines += ["layers=2", f"d={net.d}", f"width={net.width}",
                  f"activation={net.act.kind}"]
        for v, w, b in zip(net.v, net.W, net.b):
            lines.append(_hex_row("U", v, b, w))
    elif isinstance(net, ThreeLayerNet):
        rank = 0 if net.V is not None else net.left.shape[1]
        lines += ["layers=3", f"d={net.d}", f"width={net.width}",
                  f"activation={net.act.kind}", f"m1={net.m1}", f"m2={net.m2}",
                  f"rank={rank}"]
        for j in range(net.m1):
            extra = net.right[:, j] if rank else ()
            lines.append(_hex_row("L1", net.b1[j], net.W1[j], extra))
        for i in range(net.m2):
            row = net.left[i] if rank else net.V[i]
            lines.append(_hex_row("L2", net.c[i], net.u[i], row))
    else:
        raise TypeError("unknown network type")
    return "\n".join(lines) + "\n"


def loads_net(text: str, act: Activation | None = None):
    header, rows = {}, {"U": [], "L1": [], "L2": []}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line and line.split("=", 1)[0].isidentifier() and " " not in line:
            k, v = line.split("=", 1)
            header[k] = v
            continue
        tag, *vals = line.split()
        if tag not in rows:
            raise ValueError(f"unknown row tag {tag!r}")
        rows[tag].append([float.fromhex(v) for v in vals])
    try:
        layers, d = int(header["layers"]), int(header["d"])
        kind = header["activation"]
    except KeyError as exc:
        raise ValueError(f"missing header field {exc}") from None
    if act is None:
        act = activation(kind)
    elif act.kind != kind:
        raise ValueError("activation does not match the stored kind")
    if layers == 2:
        M = np.array(rows["U"], dtype=float).reshape(-1, d + 2)
        return TwoLayerNet(M[:, 2:].copy(), M[:, 1].copy(), M[:, 0].copy(), act)
    if layers != 3:
        raise ValueError("layers must be 2 or 3")
    m1, m2, rank = int(header["m1"]), int(header["m2"]), int(header["rank"])
    A = np.array(rows["L1"], dtype=float).reshape(m1, 1 + d + rank)
    B = np.array(rows["L2"], dtype=float).reshape(m2, 2 + (rank or m1))
    W1, b1 = A[:, 1:1 + d].copy(), A[:, 0].copy()
    c, u = B[:, 0].copy(), B[:, 1].copy()
    if rank:
        return ThreeLayerNet(W1, b1, c, u, act, left=B[:, 2:].copy(),
                             right=A[:, 1 + d:].T.copy())
    return ThreeLayerNet(W1, b1, c, u, act, V=B[:, 2:].copy())
