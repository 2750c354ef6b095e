"""The hard radial target: interval family, shells, signs and the surrogate.

The annulus ``[alpha sqrt(d), 2 alpha sqrt(d)]`` is cut into ``N`` equal
intervals.  An interval is *good* when ``J^2_{d/2}(2 pi R_d x) >= 1/(80 pi R_d x)``
at every point of a check grid on it.  ``g_i`` is the indicator of the shell
``{|x| in Delta_i}`` for good ``i`` and zero otherwise; the target is
``sum_i eps_i g_i`` for a sign vector ``eps``.

The surrogate replaces each indicator by a trapezoid whose ramps have slope
``slope`` (default ``N``) per unit radius, giving an ``N``-Lipschitz function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .radial import (
    QuadratureSpec,
    RadialProfile,
    ToleranceNotMet,
    _gl,
    integrate_intervals,
    shell_transform,
)
from .specfun import bessel_j, bessel_j_over_power, unit_ball_radius, unit_sphere_area

__all__ = [
    "IntervalFamily",
    "SignVector",
    "HardFunction",
    "ShellSpectra",
    "default_N",
    "build_family",
    "random_signs",
    "shell_spectra",
    "select_signs",
    "make_hard_function",
    "eval_gtilde",
    "eval_surrogate",
    "surrogate_profile",
    "mass_report",
    "interval_masses",
]


def default_N(d: int, alpha: float) -> int:
    return int(math.ceil(100.0 * alpha * d ** 1.5))


@dataclass(frozen=True)
class IntervalFamily:
    d: int
    alpha: float
    N: int
    lo: np.ndarray = field(repr=False)
    hi: np.ndarray = field(repr=False)
    good: np.ndarray = field(repr=False)
    certified: np.ndarray = field(repr=False)
    grid_points: int = 20

    @property
    def base(self) -> float:
        return self.alpha * math.sqrt(self.d)

    @property
    def width(self) -> float:
        return self.base / self.N

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.lo.tolist(), self.hi.tolist()))

    @property
    def good_indices(self) -> np.ndarray:
        return np.flatnonzero(self.good)

    @property
    def good_fraction(self) -> float:
        return float(self.good.mean())

    def index_of(self, r) -> np.ndarray:
        """Interval index of each radius (half-open ``[lo, hi)``), -1 outside."""
        r = np.asarray(r, dtype=float)
        idx = np.floor((r - self.base) / self.width).astype(np.int64)
        inside = (r >= self.lo[0]) & (r < self.hi[-1])
        idx = np.clip(idx, 0, self.N - 1)
        # the floor can be off by one near edges; the arrays are authoritative
        idx = np.where(r < self.lo[idx], idx - 1, idx)
        idx = np.clip(idx, 0, self.N - 1)
        idx = np.where(r >= self.hi[idx], idx + 1, idx)
        idx = np.clip(idx, 0, self.N - 1)
        return np.where(inside, idx, -1)


def _edges(d: int, alpha: float, N: int) -> np.ndarray:
    base = alpha * math.sqrt(d)
    return base * (1.0 + np.arange(N + 1) / N)


def build_family(d: int, alpha: float = 25.0, N: int | None = None,
                 grid_points: int = 20) -> IntervalFamily:
    if d < 2:
        raise ValueError("d must be >= 2")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    N = default_N(d, alpha) if N is None else int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    if grid_points < 20:
        raise ValueError("grid_points must be >= 20")
    e = _edges(d, alpha, N)
    lo, hi = e[:-1], e[1:]
    rd = unit_ball_radius(d)
    t = np.linspace(0.0, 1.0, grid_points)
    x = lo[:, None] + (hi - lo)[:, None] * t
    j = bessel_j(0.5 * d, 2.0 * math.pi * rd * x.ravel()).reshape(x.shape)
    good = np.all(j * j >= 1.0 / (80.0 * math.pi * rd * x), axis=1)
    # between grid points |J| can dip by at most (2 pi R_d) * spacing / 2
    dip = math.pi * rd * (hi - lo) / (grid_points - 1)
    certified = good & (np.min(np.abs(j), axis=1) - dip
                        >= np.sqrt(1.0 / (80.0 * math.pi * rd * lo)))
    return IntervalFamily(d, float(alpha), N, lo, hi, good, certified, grid_points)


@dataclass(frozen=True)
class SignVector:
    eps: np.ndarray = field(repr=False)
    high_freq_mass: float
    seed: int
    trial: int = 0
    trial_masses: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not np.all(np.abs(self.eps) == 1):
            raise ValueError("signs must be +-1")
        if not self.high_freq_mass >= 0:
            raise ValueError("high_freq_mass must be >= 0")


@dataclass(frozen=True)
class HardFunction:
    family: IntervalFamily
    signs: SignVector
    slope: float | None = None

    @property
    def surrogate_lipschitz(self) -> float:
        return float(self.family.N if self.slope is None else self.slope)

    def to_text(self) -> str:
        f = self.family
        good = "".join("1" if g else "0" for g in f.good)
        cert = "".join("1" if g else "0" for g in f.certified)
        eps = "".join("1" if e > 0 else "0" for e in self.signs.eps)
        return "\n".join([
            "# hard function",
            f"d={f.d}",
            f"alpha={float(f.alpha).hex()}",
            f"N={f.N}",
            f"grid_points={f.grid_points}",
            f"slope={self.surrogate_lipschitz.hex()}",
            f"seed={self.signs.seed}",
            f"trial={self.signs.trial}",
            f"high_freq_mass={float(self.signs.high_freq_mass).hex()}",
            f"good={good}",
            f"certified={cert}",
            f"signs={eps}",
        ]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "HardFunction":
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            kv[key.strip()] = val.strip()
        try:
            d, N = int(kv["d"]), int(kv["N"])
            alpha = float.fromhex(kv["alpha"])
            good = np.array([c == "1" for c in kv["good"]], dtype=bool)
            eps = np.array([1 if c == "1" else -1 for c in kv["signs"]], dtype=np.int8)
        except (KeyError, ValueError) as exc:
            raise ValueError(f"malformed hard-function record: {exc}") from exc
        if good.size != N or eps.size != N:
            raise ValueError("bitstring length does not match N")
        cert = np.array([c == "1" for c in kv.get("certified", kv["good"])], dtype=bool)
        e = _edges(d, alpha, N)
        fam = IntervalFamily(d, alpha, N, e[:-1], e[1:], good, cert,
                             int(kv.get("grid_points", 20)))
        signs = SignVector(eps, float.fromhex(kv["high_freq_mass"]),
                           int(kv["seed"]), int(kv.get("trial", 0)))
        return cls(fam, signs, float.fromhex(kv["slope"]))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _radii(h: HardFunction, x, points: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if points:
        if x.shape[-1] != h.family.d:
            raise ValueError(f"points must have last dimension {h.family.d}")
        return np.linalg.norm(x, axis=-1)
    return np.abs(x)


def eval_gtilde(h: HardFunction, x, points: bool = False):
    """``sum eps_i g_i`` at radii ``x`` (or at points if ``points``)."""
    r = _radii(h, x, points)
    idx = h.family.index_of(r)
    safe = np.maximum(idx, 0)
    val = np.where((idx >= 0) & h.family.good[safe], h.signs.eps[safe], 0)
    val = val.astype(float)
    return float(val) if val.ndim == 0 else val


def eval_surrogate(h: HardFunction, x, points: bool = False):
    """Trapezoid surrogate ``eps_i min(1, slope * dist(r, Delta_i^c))``."""
    r = _radii(h, x, points)
    f = h.family
    idx = f.index_of(r)
    safe = np.maximum(idx, 0)
    dist = np.minimum(r - f.lo[safe], f.hi[safe] - r)
    ramp = np.minimum(1.0, h.surrogate_lipschitz * np.maximum(dist, 0.0))
    eps = h.signs.eps.astype(float)
    val = np.where((idx >= 0) & f.good[safe], eps[safe] * ramp, 0.0)
    return float(val) if val.ndim == 0 else val


def surrogate_profile(h: HardFunction) -> RadialProfile:
    """The surrogate as a piecewise-linear :class:`RadialProfile`."""
    f = h.family
    ramp = 1.0 / h.surrogate_lipschitz
    g = f.good_indices
    lo, hi = f.lo[g], f.hi[g]
    pts = [lo, hi]
    wide = (hi - lo) > 2.0 * ramp
    pts.append(np.where(wide, lo + ramp, 0.5 * (lo + hi)))
    pts.append(np.where(wide, hi - ramp, 0.5 * (lo + hi)))
    bp = tuple(np.unique(np.concatenate(pts)).tolist())
    return RadialProfile((f.lo[0], f.hi[-1]), lambda r: eval_surrogate(h, r),
                         h.surrogate_lipschitz, bp, linear_pieces=True)


# ---------------------------------------------------------------------------
# masses and spectra
# ---------------------------------------------------------------------------


def interval_masses(family: IntervalFamily, spec: QuadratureSpec | None = None) -> np.ndarray:
    """``int_{Delta_i} d J^2_{d/2}(2 pi R_d r)/r dr`` for every interval."""
    return integrate_intervals(family.d, family.lo, family.hi, spec)


def mass_report(h: HardFunction, spec: QuadratureSpec | None = None) -> float:
    """``int (sum eps_i g_i)^2 phi^2``; sign-free because supports are disjoint."""
    f = h.family
    g = f.good_indices
    if g.size == 0:
        return 0.0
    return float(integrate_intervals(f.d, f.lo[g], f.hi[g], spec).sum())


@dataclass(frozen=True)
class ShellSpectra:
    """Low-frequency masses (``|w| <= cutoff``) of shells and signed sums."""

    cutoff: float
    total_g: np.ndarray = field(repr=False)       # closed-form L2 mass of g_i
    low_g: np.ndarray = field(repr=False)         # low-frequency mass of g_i
    total_gphi: np.ndarray = field(repr=False)    # int (g_i phi)^2
    low_gphi: np.ndarray = field(repr=False)      # low-frequency mass of g_i phi
    low_signed: np.ndarray = field(repr=False)    # per sign trial
    outer_nodes: int = 0
    rel_change: float = 0.0


def random_signs(N: int, seed: int, trial: int) -> np.ndarray:
    """Sign vector of trial ``trial``; streams are independent and nested."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))
    return (2 * rng.integers(0, 2, size=N) - 1).astype(np.int8)


def _spectra_level(family: IntervalFamily, cutoff: float, width: float,
                   spec: QuadratureSpec, inner_order: int,
                   sign_matrix: np.ndarray | None, chunk: int = 48):
    d = family.d
    nu = 0.5 * d - 1.0
    ad = unit_sphere_area(d)
    rd = unit_ball_radius(d)
    edges = np.concatenate([family.lo, family.hi[-1:]])
    gi = family.good_indices
    # inner nodes for g_i phi on each good interval
    t, tw = _gl(inner_order)
    lo, hi = family.lo[gi], family.hi[gi]
    s = (0.5 * (lo + hi))[:, None] + (0.5 * (hi - lo))[:, None] * t
    sw = (0.5 * (hi - lo))[:, None] * tw
    # (R/s)^{d/2} J_{d/2}(2 pi R s) times s^{d-1} and the rule weights
    ph = (rd / s) ** (0.5 * d) * bessel_j(0.5 * d, 2.0 * math.pi * rd * s)
    base = (sw * ph * s ** (d - 1)).ravel()
    s = s.ravel()
    const = 2.0 * math.pi * (2.0 * math.pi) ** nu
    nint = inner_order

    x, wt = _outer_nodes(cutoff, width, spec)
    low_g = np.zeros(family.N)
    low_gphi = np.zeros(gi.size)
    ntr = 0 if sign_matrix is None else sign_matrix.shape[0]
    low_signed = np.zeros(ntr)
    for k0 in range(0, x.size, chunk):
        wk = x[k0:k0 + chunk]
        weight = wt[k0:k0 + chunk] * ad * wk ** (d - 1)
        F = shell_transform(d, 0.0, edges[None, :], wk[:, None])
        gh = F[:, 1:] - F[:, :-1]
        low_g += weight @ (gh * gh)
        lam = bessel_j_over_power(nu, 2.0 * math.pi * wk[:, None] * s[None, :])
        T = const * (lam * base).reshape(wk.size, gi.size, nint).sum(axis=2)
        low_gphi += weight @ (T * T)
        if ntr:
            S = T @ sign_matrix.T
            low_signed += weight @ (S * S)
    return low_g, low_gphi, low_signed, x.size


def _outer_nodes(cutoff: float, width: float, spec: QuadratureSpec):
    t, tw = _gl(spec.gl_order)
    n = max(1, int(math.ceil(cutoff / width)))
    cuts = np.linspace(0.0, cutoff, n + 1)
    half = 0.5 * np.diff(cuts)
    mid = 0.5 * (cuts[:-1] + cuts[1:])
    return (mid[:, None] + half[:, None] * t).ravel(), (half[:, None] * tw).ravel()


def shell_spectra(family: IntervalFamily, cutoff: float | None = None,
                  spec: QuadratureSpec | None = None, signs: np.ndarray | None = None,
                  inner_order: int = 3) -> ShellSpectra:
    """Low-frequency masses of every ``g_i``, every ``g_i phi`` and of signed sums.

    One sweep over the outer frequency nodes serves all intervals: the
    transform of ``g_i`` is closed form, the transform of ``g_i phi`` uses a
    short Gauss-Legendre rule on the (thin) interval.  ``signs`` is an optional
    ``(trials, N)`` matrix; each row gives ``sum eps_i g_i phi`` over good ``i``.
    The outer rule is refined until the largest relative change of any
    reported quantity is within ``spec.rel_tol``.
    """
    spec = spec or QuadratureSpec(rel_tol=1e-3)
    d = family.d
    rd = unit_ball_radius(d)
    cutoff = 2.0 * rd if cutoff is None else float(cutoff)
    gi = family.good_indices
    sm = None if signs is None else np.asarray(signs, dtype=float)[:, gi]
    ad = unit_sphere_area(d)
    total_g = ad * (family.hi ** d - family.lo ** d) / d
    total_gphi = integrate_intervals(d, family.lo[gi], family.hi[gi], spec)
    # transforms oscillate in w with period ~ 1/(outer radius)
    wavelength = min(1.0 / family.hi[-1], cutoff)
    width = wavelength * spec.gl_order / spec.nodes_per_wavelength
    prev = _spectra_level(family, cutoff, width, spec, inner_order, sm)
    for _ in range(spec.max_levels):
        width *= 0.5
        cur = _spectra_level(family, cutoff, width, spec, inner_order, sm)
        change = 0.0
        for a, b in zip(prev[:3], cur[:3]):
            if b.size:
                # floor keeps near-zero masses from demanding absurd precision
                floor = 1e-9 * max(float(np.max(np.abs(b))), 1e-300)
                change = max(change, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor))))
        if change <= spec.rel_tol:
            low_gphi = np.zeros(family.N)
            low_gphi[gi] = cur[1]
            full_tgphi = np.zeros(family.N)
            full_tgphi[gi] = total_gphi
            return ShellSpectra(cutoff, total_g, cur[0], full_tgphi, low_gphi,
                                cur[2], cur[3], change)
        prev = cur
    raise ToleranceNotMet("shell_spectra: outer refinement stalled", math.nan, change)


def select_signs(family: IntervalFamily, trials: int = 64,
                 spec: QuadratureSpec | None = None, seed: int = 0,
                 inner_order: int = 3) -> SignVector:
    """Best of ``trials`` random sign vectors by high-frequency mass of ``sum eps_i g_i phi``.

    High-frequency mass = total (sign-free, disjoint supports) minus the
    low-frequency part below ``2 R_d``.  Ties go to the lowest trial index.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    spec = spec or QuadratureSpec(rel_tol=1e-3)
    signs = np.stack([random_signs(family.N, seed, t) for t in range(trials)])
    sp = shell_spectra(family, None, spec, signs, inner_order)
    return signs_from_spectra(sp, signs, seed)


def signs_from_spectra(sp: ShellSpectra, signs: np.ndarray, seed: int) -> SignVector:
    total = float(sp.total_gphi.sum())
    high = np.maximum(total - sp.low_signed, 0.0)
    best = int(np.argmax(high))    # argmax returns the first maximiser
    return SignVector(np.asarray(signs[best], dtype=np.int8), float(high[best]),
                      int(seed), best, tuple(float(v) for v in high))


def make_hard_function(d: int = 4, alpha: float = 25.0, N: int | None = None,
                       trials: int = 64, seed: int = 0,
                       spec: QuadratureSpec | None = None,
                       slope: float | None = None) -> HardFunction:
    fam = build_family(d, alpha, N)
    sv = select_signs(fam, trials, spec, seed)
    return HardFunction(fam, sv, slope)
