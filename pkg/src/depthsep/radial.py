"""Radial machinery: phi, the measure mu, radial quadrature, Hankel transform.

Conventions.  ``phi(r) = (R_d/r)^{d/2} J_{d/2}(2 pi R_d r)`` is the Fourier
transform of the unit-volume ball indicator.  Its square is a probability
density on R^d; in polar form the radial density is ``d J_{d/2}^2(2 pi R_d r)/r``.

The radial Fourier transform of a radial ``g`` is

    ghat(w) = 2 pi int g(s) (s/w)^{d/2-1} J_{d/2-1}(2 pi s w) s ds
            = 2 pi (2 pi)^nu int g(s) s^{d-1} Lambda_nu(2 pi s w) ds,

with ``nu = d/2 - 1`` and ``Lambda_nu(z) = J_nu(z)/z^nu``.  The second form
has no singularity at ``w = 0``, where it reduces to ``A_d int g s^{d-1} ds``.

Quadrature is composite Gauss-Legendre (or Simpson) on panels sized from
the known oscillation wavelength, with a refinement comparison as the error
estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .specfun import (
    bessel_j,
    bessel_j_over_power,
    krasikov_terms,
    unit_ball_radius,
    unit_sphere_area,
)

__all__ = [
    "QuadratureSpec",
    "RadialProfile",
    "RadialDensity",
    "ToleranceNotMet",
    "phi",
    "phi_squared_radial",
    "radial_integrate",
    "integrate_intervals",
    "hankel_transform",
    "low_freq_mass",
    "shell_transform",
    "density_tail_bound",
    "build_density",
    "sample_mu",
    "sample_radius",
    "write_cdf_csv",
    "indicator",
]

PANEL_RULES = ("gauss-legendre", "composite-simpson")


class ToleranceNotMet(RuntimeError):
    """Refinement did not reach the requested relative tolerance."""

    def __init__(self, message: str, coarse: float, fine: float):
        super().__init__(f"{message} (coarse={coarse!r}, fine={fine!r})")
        self.coarse = coarse
        self.fine = fine


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_per_wavelength: int = 24
    panel_rule: str = "gauss-legendre"
    rel_tol: float = 1e-4
    gl_order: int = 8
    max_levels: int = 6
    max_nodes: int = 20_000_000

    def __post_init__(self):
        if self.nodes_per_wavelength < 20:
            raise ValueError("nodes_per_wavelength must be >= 20")
        if self.panel_rule not in PANEL_RULES:
            raise ValueError(f"panel_rule must be one of {PANEL_RULES}")
        if not 0.0 < self.rel_tol <= 1e-2:
            raise ValueError("rel_tol must lie in (0, 1e-2]")
        if self.gl_order < 2 or self.max_levels < 1:
            raise ValueError("gl_order >= 2 and max_levels >= 1 required")

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.nodes_per_wavelength, self.panel_rule,
                              self.rel_tol, self.gl_order, self.max_levels,
                              self.max_nodes)


@dataclass(frozen=True)
class RadialProfile:
    """A compactly supported radial function ``r -> value``.

    ``fn`` must accept numpy arrays.  Values outside ``support`` are forced to
    zero.  ``breakpoints`` are radii where the profile has kinks or jumps;
    panels never straddle them.  ``linear_pieces`` marks profiles that are
    affine between consecutive breakpoints (the network compiler exploits it).
    """

    support: tuple[float, float]
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz_hint: float | None = None
    breakpoints: tuple[float, ...] = ()
    linear_pieces: bool = False

    def __post_init__(self):
        a, b = self.support
        if not (0.0 <= a < b and math.isfinite(b)):
            raise ValueError(f"bad support {self.support}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        a, b = self.support
        inside = (r >= a) & (r <= b)
        out = np.zeros(r.shape)
        if inside.any():
            out[inside] = np.broadcast_to(self.fn(r[inside]), r[inside].shape)
        return out

    def eval(self, r):
        return self(r)

    def edges(self) -> np.ndarray:
        a, b = self.support
        pts = [p for p in self.breakpoints if a < p < b]
        return np.unique(np.array([a, *pts, b], dtype=float))


def indicator(lo: float, hi: float) -> RadialProfile:
    """Indicator of ``[lo, hi]`` (the closed/half-open choice has measure zero)."""
    return RadialProfile((lo, hi), lambda r: np.ones_like(r), 0.0,
                         (lo, hi), linear_pieces=True)


# ---------------------------------------------------------------------------
# phi and the radial density
# ---------------------------------------------------------------------------


def phi(d: int, r):
    """Fourier transform of the unit-volume ball indicator, radial form."""
    if d < 1:
        raise ValueError("d must be >= 1")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("phi needs r >= 0")
    rd = unit_ball_radius(d)
    z = 2.0 * math.pi * rd * r
    # (R/r)^{d/2} J(z) = (2 pi R^2)^{d/2} Lambda_{d/2}(z);  Lambda(0) Gamma(d/2+1) 2^{d/2} = 1
    scale = math.exp(0.5 * d * math.log(2.0 * math.pi * rd * rd))
    out = scale * bessel_j_over_power(0.5 * d, z)
    return float(out) if np.ndim(out) == 0 else out


def phi_squared_radial(d: int, r):
    """Radial density of mu: ``A_d r^{d-1} phi^2(r) = d J_{d/2}^2(2 pi R_d r)/r``."""
    r = np.asarray(r, dtype=float)
    rd = unit_ball_radius(d)
    out = np.empty(r.shape)
    pos = r > 0
    j = bessel_j(0.5 * d, 2.0 * math.pi * rd * r[pos])
    out[pos] = d * j * j / r[pos]
    out[~pos] = 0.0
    return out


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def _gl(order: int):
    return np.polynomial.legendre.leggauss(order)


def _panel_nodes(edges: np.ndarray, width: float, spec: QuadratureSpec):
    """Nodes and weights of the composite rule on consecutive ``edges``."""
    xs, ws = [], []
    if spec.panel_rule == "gauss-legendre":
        t, tw = _gl(spec.gl_order)
        for a, b in zip(edges[:-1], edges[1:]):
            n = max(1, int(math.ceil((b - a) / width)))
            cuts = np.linspace(a, b, n + 1)
            half = 0.5 * np.diff(cuts)
            mid = 0.5 * (cuts[:-1] + cuts[1:])
            xs.append((mid[:, None] + half[:, None] * t).ravel())
            ws.append((half[:, None] * tw).ravel())
    else:
        for a, b in zip(edges[:-1], edges[1:]):
            n = max(2, 2 * int(math.ceil(0.5 * (b - a) * spec.gl_order / width)))
            x = np.linspace(a, b, n + 1)
            w = np.full(n + 1, 2.0)
            w[1::2] = 4.0
            w[0] = w[-1] = 1.0
            xs.append(x)
            ws.append(w * (b - a) / (3.0 * n))
    return np.concatenate(xs), np.concatenate(ws)


def _refine_loop(evaluate, wavelength: float, spec: QuadratureSpec, what: str,
                 scale=None):
    """Evaluate with panel widths halving until two levels agree to rel_tol.

    ``evaluate(width)`` returns an array (or scalar) estimate.  Agreement is
    measured against the sup norm of the finer estimate, so arrays of
    oscillating values near zero do not stall the loop.
    """
    # panel width so the rule has nodes_per_wavelength samples per wavelength
    width = wavelength * spec.gl_order / spec.nodes_per_wavelength
    prev = np.asarray(evaluate(width), dtype=float)
    for _ in range(spec.max_levels):
        width *= 0.5
        cur = np.asarray(evaluate(width), dtype=float)
        ref = float(np.max(np.abs(cur))) if cur.size else 0.0
        if scale is not None:
            ref = max(ref, scale)
        err = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        if err <= spec.rel_tol * ref or ref == 0.0:
            return cur
        prev = cur
    raise ToleranceNotMet(f"{what}: rel_tol {spec.rel_tol} not reached",
                          float(np.max(np.abs(prev))), float(np.max(np.abs(cur))))


def _weight_fn(weight: str, d: int):
    if weight == "lebesgue_radial":
        ad = unit_sphere_area(d)
        return lambda r: ad * r ** (d - 1)
    if weight == "phi_squared":
        return lambda r: phi_squared_radial(d, r)
    raise ValueError(f"unknown weight {weight!r}")


def radial_integrate(p: RadialProfile, weight: str, d: int,
                     spec: QuadratureSpec | None = None,
                     limits: tuple[float, float] | None = None) -> float:
    """``int p(r) w(r) dr`` with ``w = A_d r^{d-1}`` or ``A_d r^{d-1} phi^2``.

    Raises :class:`ToleranceNotMet` if refinement stalls.
    """
    spec = spec or QuadratureSpec()
    wfn = _weight_fn(weight, d)
    edges = p.edges()
    if limits is not None:
        lo, hi = limits
        edges = np.unique(np.clip(np.concatenate([edges, [lo, hi]]), lo, hi))
    if edges.size < 2:
        return 0.0
    rd = unit_ball_radius(d)
    wavelength = 1.0 / rd
    if p.lipschitz_hint:
        wavelength = min(wavelength, 1.0 / p.lipschitz_hint)
    wavelength = min(wavelength, float(edges[-1] - edges[0]))

    def evaluate(width):
        x, w = _panel_nodes(edges, width, spec)
        if x.size > spec.max_nodes:
            raise ToleranceNotMet("radial_integrate: node budget exceeded", math.nan, math.nan)
        # evaluate inside the support even on its closed ends
        return float(np.dot(w, p.fn(x) * wfn(x))) if x.size else 0.0

    return float(_refine_loop(evaluate, wavelength, spec, "radial_integrate"))


def integrate_intervals(d: int, lo, hi, spec: QuadratureSpec | None = None,
                        profile: Callable | None = None) -> np.ndarray:
    """Vectorised ``int_lo^hi profile(r) d J^2_{d/2}(2 pi R_d r)/r dr`` per interval.

    Meant for many short intervals (much shorter than the Bessel wavelength):
    a fixed Gauss-Legendre rule per interval, checked against one with twice
    the order.
    """
    spec = spec or QuadratureSpec()
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    rd = unit_ball_radius(d)
    span = float(np.max(hi - lo)) if lo.size else 0.0
    panels = max(1, int(math.ceil(span * rd * spec.nodes_per_wavelength / spec.gl_order)))

    def level(order, npan):
        t, tw = _gl(order)
        u = (np.arange(npan)[:, None] + 0.5 * (t + 1.0)).ravel() / npan
        wu = np.tile(tw, npan) / (2.0 * npan)
        r = lo[:, None] + (hi - lo)[:, None] * u
        val = phi_squared_radial(d, r)
        if profile is not None:
            val = val * profile(r)
        return (val * wu).sum(axis=1) * (hi - lo)

    coarse = level(spec.gl_order, panels)
    fine = level(2 * spec.gl_order, panels)
    ref = float(np.max(np.abs(fine))) if fine.size else 0.0
    err = float(np.max(np.abs(fine - coarse))) if fine.size else 0.0
    if err > spec.rel_tol * ref and ref > 0:
        fine2 = level(2 * spec.gl_order, 4 * panels)
        if float(np.max(np.abs(fine2 - fine))) > spec.rel_tol * ref:
            raise ToleranceNotMet("integrate_intervals", float(ref), float(np.max(np.abs(fine2))))
        fine = fine2
    return fine


def hankel_transform(p: RadialProfile, d: int, w, spec: QuadratureSpec | None = None):
    """Radial Fourier transform of ``p`` in dimension ``d`` at frequency/ies ``w``."""
    spec = spec or QuadratureSpec()
    w = np.asarray(w, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    if np.any(w < 0):
        raise ValueError("w must be >= 0")
    nu = 0.5 * d - 1.0
    const = 2.0 * math.pi * (2.0 * math.pi) ** nu
    edges = p.edges()
    wmax = float(w.max()) if w.size else 0.0
    wavelength = 1.0 / max(wmax, unit_ball_radius(d))
    if p.lipschitz_hint:
        wavelength = min(wavelength, 1.0 / p.lipschitz_hint)
    wavelength = min(wavelength, float(edges[-1] - edges[0]))
    ad = unit_sphere_area(d)

    def evaluate(width):
        s, sw = _panel_nodes(edges, width, spec)
        base = sw * p.fn(s) * s ** (d - 1)
        out = np.empty(w.size)
        for k0 in range(0, w.size, 256):
            wk = w[k0:k0 + 256]
            lam = bessel_j_over_power(nu, 2.0 * math.pi * np.outer(wk, s))
            out[k0:k0 + 256] = const * (lam @ base)
        return out

    # scale: sup |ghat| <= A_d int |g| s^{d-1} ds
    s0, sw0 = _panel_nodes(edges, wavelength, spec)
    scale = ad * float(np.dot(sw0, np.abs(p.fn(s0)) * s0 ** (d - 1)))
    out = _refine_loop(evaluate, wavelength, spec, "hankel_transform",
                       scale=1e-12 * scale)
    return float(out[0]) if scalar else out


def shell_transform(d: int, lo, hi, w):
    """Closed-form radial transform of indicators of ``[lo, hi]`` at ``w``.

    ``ghat(w) = (2 pi)^{d/2} [s^d Lambda_{d/2}(2 pi w s)]_{lo}^{hi}``, which is the
    antiderivative form of ``w^{-d/2} [s^{d/2} J_{d/2}(2 pi w s)]``.  Broadcasts
    ``lo``/``hi`` against ``w``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    w = np.asarray(w, dtype=float)
    c = (2.0 * math.pi) ** (0.5 * d)
    top = hi ** d * bessel_j_over_power(0.5 * d, 2.0 * math.pi * w * hi)
    bot = lo ** d * bessel_j_over_power(0.5 * d, 2.0 * math.pi * w * lo)
    return c * (top - bot)


def low_freq_mass(p: RadialProfile, d: int, cutoff: float,
                  spec: QuadratureSpec | None = None) -> float:
    """``int_{|w| <= cutoff} ghat(w)^2 dw = int_0^cutoff A_d w^{d-1} ghat^2 dw``."""
    if cutoff <= 0:
        raise ValueError("cutoff must be > 0")
    spec = spec or QuadratureSpec()
    ad = unit_sphere_area(d)
    smax = p.support[1]
    # ghat oscillates in w with period about 1/smax
    wavelength = min(1.0 / smax, cutoff)
    edges = np.array([0.0, cutoff])

    def evaluate(width):
        x, wt = _panel_nodes(edges, width, spec)
        gh = hankel_transform(p, d, x, spec)
        return float(np.dot(wt, ad * x ** (d - 1) * gh * gh))

    return max(0.0, float(_refine_loop(evaluate, wavelength, spec, "low_freq_mass")))


# ---------------------------------------------------------------------------
# the measure mu
# ---------------------------------------------------------------------------


def density_tail_bound(d: int, r_max: float) -> float:
    """Certified upper bound on ``int_{r_max}^inf d J^2_{d/2}(2 pi R_d r)/r dr``.

    Uses ``|J_{d/2}(x)| <= sqrt(2/(pi c x)) + x^{-3/2}`` (valid for x >= d), so
    ``J^2 <= 2/(pi c x) (1 + sqrt(pi/2)/x)^2`` with ``c`` increasing in ``x``.
    """
    rd = unit_ball_radius(d)
    x = 2.0 * math.pi * rd * r_max
    d_eff = max(d, 2)
    if x < d_eff:
        return math.inf
    c = krasikov_terms(d_eff, x).c_dx
    slack = (1.0 + math.sqrt(math.pi / 2.0) / x) ** 2
    return d * slack / (math.pi ** 2 * rd * r_max * c)


@dataclass(frozen=True)
class RadialDensity:
    d: int
    R_d: float
    r_max: float
    tail_bound: float
    r_grid: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.cdf[-1])

    def cdf_at(self, r):
        return np.interp(r, self.r_grid, self.cdf)


def build_density(d: int, tail_tol: float = 1e-3,
                  spec: QuadratureSpec | None = None,
                  max_r: float = 1e7) -> RadialDensity:
    """Tabulate the radial CDF of mu up to a radius with certified tail <= tail_tol."""
    if not 0.0 < tail_tol <= 0.01:
        raise ValueError("tail_tol must lie in (0, 0.01]")
    if d < 1:
        raise ValueError("d must be >= 1")
    spec = spec or QuadratureSpec()
    rd = unit_ball_radius(d)
    # the bound is ~ d/(pi^2 R_d r); start there and walk outward
    r_max = d / (math.pi ** 2 * rd * tail_tol)
    while density_tail_bound(d, r_max) > tail_tol:
        r_max *= 1.01
        if r_max > max_r:
            raise ValueError(f"tail_tol {tail_tol} unreachable below r={max_r}")
    # one table entry per 1/nodes_per_wavelength of a wavelength, each cell
    # integrated with its own Gauss-Legendre rule
    width = 1.0 / (rd * spec.nodes_per_wavelength)

    def cumulative(width):
        n = max(1, int(math.ceil(r_max / width)))
        cuts = np.linspace(0.0, r_max, n + 1)
        t, tw = _gl(spec.gl_order)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        x = mid[:, None] + half[:, None] * t
        vals = phi_squared_radial(d, x.ravel()).reshape(x.shape)
        per = (vals * tw).sum(axis=1) * half
        return cuts, np.concatenate([[0.0], np.cumsum(per)])

    cuts, cdf = cumulative(width)
    cuts2, cdf2 = cumulative(0.5 * width)
    if abs(cdf2[-1] - cdf[-1]) > spec.rel_tol * cdf2[-1]:
        raise ToleranceNotMet("build_density", cdf[-1], cdf2[-1])
    cdf2 = np.maximum.accumulate(cdf2)
    return RadialDensity(d, rd, r_max, density_tail_bound(d, r_max), cuts2, cdf2)


def sample_radius(density: RadialDensity, rng: np.random.Generator, n: int) -> np.ndarray:
    """Inverse-CDF draws of the radius, conditioned on ``r <= r_max``."""
    u = rng.uniform(0.0, density.total, size=n)
    return np.interp(u, density.cdf, density.r_grid)


def sample_mu(density: RadialDensity, rng: np.random.Generator, n: int | None = None):
    """Points ``x ~ mu`` truncated to ``|x| <= r_max``; one point if ``n`` is None."""
    m = 1 if n is None else n
    r = sample_radius(density, rng, m)
    g = rng.standard_normal((m, density.d))
    norm = np.linalg.norm(g, axis=1)
    # a zero Gaussian vector has probability zero; guard anyway
    norm[norm == 0] = 1.0
    pts = g / norm[:, None] * r[:, None]
    return pts[0] if n is None else pts


def write_cdf_csv(density: RadialDensity, path, stride: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "F"])
        for r, f in zip(density.r_grid[::stride], density.cdf[::stride]):
            w.writerow([repr(float(r)), repr(float(f))])
