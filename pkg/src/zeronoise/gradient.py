"""Gradient flows on the circle: explicit Gibbs densities and concentration.

For a drift h = -H' the stationary density is known in closed form,
rho_eps = c_eps exp(-2 H / eps), and as eps shrinks it concentrates on the
minimizers of H. This module computes that density in log-domain, locates
and refines the minima of sampled potentials, and quantifies concentration
as the escape mass outside a delta-ball of the global minimum, whose decay
rate eps * log m(eps) -> -2 * (barrier height) follows Laplace asymptotics.

Gradient drifts vanish at critical points, so they are rejected by the
nonsingular-flow gate; the circle solvers still accept them through their
raw signed-drift path, which the tests use to cross-check the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .errors import ModeError, RefineGridError, ValidationError
from .circle import Density
from .fields import (
    PeriodicField1D,
    cumulative_integral,
    deriv_samples,
    evaluate_trig,
)

# minima closer in value than this to the global minimum count as global
GLOBAL_MIN_TOL = 1e-9
# a well shallower than this has no measurable concentration rate
FLAT_BARRIER_TOL = 1e-12
# density must be carried by at least this many grid cells
MIN_SUPPORT_CELLS = 3


@dataclass(frozen=True)
class Extremum:
    location: float
    value: float
    curvature: float  # second derivative from the local quadratic fit


@dataclass(frozen=True)
class PotentialField:
    """A sampled potential with its refined local minima.

    Minima are strict sample-local minima refined by a three-point quadratic
    fit; each must be nondegenerate (positive fitted curvature). A constant
    potential legitimately has none.
    """

    H: PeriodicField1D
    minima: list[Extremum] = dc_field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "minima", _refined_extrema(self.H.samples, kind="min"))
        for m in self.minima:
            if m.curvature <= 0:
                raise ValidationError(
                    f"degenerate minimum at x={m.location}: fitted H'' = {m.curvature}"
                )

    @property
    def grid(self):
        return self.H.grid

    def global_minima(self) -> list[Extremum]:
        if not self.minima:
            return []
        best = min(m.value for m in self.minima)
        return [m for m in self.minima if m.value - best <= GLOBAL_MIN_TOL]


@dataclass(frozen=True)
class GibbsDensity:
    """Normalized exp(-2 H / eps) with the log normalizer recorded."""

    density: Density
    epsilon: float
    log_normalizer: float


@dataclass(frozen=True)
class ConcentrationRow:
    epsilon: float
    outside_mass: float
    eps_times_log_mass: float


@dataclass(frozen=True)
class ConcentrationTable:
    rows: list[ConcentrationRow]
    delta: float
    center: float
    barrier: float  # Delta H on the ball boundary
    monotone: bool
    rate_ok: bool | None  # None when the barrier is flat (no rate to check)


def _refined_extrema(samples: np.ndarray, kind: str) -> list[Extremum]:
    """Strict local extrema of periodic samples, refined by quadratic fit."""
    s = samples if kind == "min" else -samples
    n = s.size
    left = np.roll(s, 1)
    right = np.roll(s, -1)
    idx = np.nonzero((s < left) & (s < right))[0]
    out = []
    h = 1.0 / n
    for i in idx:
        fm, f0, fp = left[i], s[i], right[i]
        denom = fm - 2.0 * f0 + fp
        shift = 0.5 * (fm - fp) / denom
        value = f0 - 0.125 * (fm - fp) ** 2 / denom
        curv = denom / h**2
        loc = (i / n + shift * h) % 1.0
        if kind == "max":
            value, curv = -value, -curv
        out.append(Extremum(location=float(loc), value=float(value), curvature=float(curv)))
    return sorted(out, key=lambda m: m.location)


def gradient_drift(potential: PotentialField) -> PeriodicField1D:
    """The drift -H' (spectral derivative). Signed: it vanishes at critical
    points, so it does not qualify as a nonsingular flow field."""
    return PeriodicField1D(potential.grid, -deriv_samples(potential.H.samples))


def gibbs_density(potential: PotentialField, eps: float) -> GibbsDensity:
    """Normalized exp(-2 (H - min H) / eps), evaluated in log-domain.

    The subtraction of min H is the running-maximum rescaling: the largest
    exponent is exactly 0. If fewer than MIN_SUPPORT_CELLS samples retain
    any mass the grid cannot resolve the density at this eps and a
    refine-grid error is raised.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    H = potential.H.samples
    log_w = -2.0 * (H - H.min()) / eps
    w = np.exp(log_w)
    support = int(np.count_nonzero(w > 0))
    top_share = float(w.max() / w.sum())
    if support < MIN_SUPPORT_CELLS or top_share > 1.0 - 1e-12:
        raise RefineGridError(
            f"all mass collapsed into {support} grid cell(s) at eps={eps}; "
            f"refine the grid (n={potential.grid.n}) or raise eps"
        )
    Z = float(np.mean(w))
    rho = w / Z
    # c_eps normalizes exp(-2 H / eps) itself, so the shifted minimum re-enters
    log_normalizer = -np.log(Z) + 2.0 * float(H.min()) / eps
    return GibbsDensity(
        density=Density(PeriodicField1D(potential.grid, rho)),
        epsilon=float(eps),
        log_normalizer=float(log_normalizer),
    )


def _mass_between(density: Density, a: float, b: float) -> float:
    """Mass of the density on the arc from a to b (a < b, b - a <= 1).

    Spectrally exact: the fluctuating part of the antiderivative is periodic
    and evaluated by trigonometric interpolation; the mean contributes the
    arc length times 1.
    """
    fluct = PeriodicField1D(density.grid, density.samples - 1.0)
    G = cumulative_integral(fluct)
    Ga, Gb = evaluate_trig(G, np.array([a, b]))
    return float((b - a) + (Gb - Ga))


_CONC_PANELS = 256
_CONC_NODES, _CONC_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _log_gibbs_integral(potential: PotentialField, eps: float, a: float, b: float) -> float:
    """log of integral over [a, b] of exp(-2 (H - min H) / eps).

    Composite Gauss-Legendre with the potential evaluated by trigonometric
    interpolation, accumulated in log domain: escape masses like exp(-40)
    sit twenty orders below the resolution of 1 - (inside mass), so they
    must be integrated directly, never obtained by subtraction.
    """
    edges = np.linspace(a, b, _CONC_PANELS + 1)
    half = 0.5 * (edges[1] - edges[0])
    mids = 0.5 * (edges[:-1] + edges[1:])
    xs = (mids[:, None] + half * _CONC_NODES[None, :]).ravel()
    t = -2.0 * (evaluate_trig(potential.H, xs) - float(potential.H.samples.min())) / eps
    t_max = float(t.max())
    contrib = np.exp(t - t_max).reshape(_CONC_PANELS, -1) @ _CONC_WEIGHTS
    return t_max + float(np.log(half * contrib.sum()))


def _unique_global_minimum(potential: PotentialField) -> Extremum:
    globals_ = potential.global_minima()
    if len(globals_) > 1:
        locs = ", ".join(f"{m.location:.6f}" for m in globals_)
        raise ModeError(
            f"potential has {len(globals_)} global minima (at {locs}); "
            "single-well assertions do not apply, use well_masses() instead"
        )
    if not globals_:
        # constant potential: every point minimizes; use the first sample
        return Extremum(location=0.0, value=float(potential.H.samples[0]), curvature=0.0)
    return globals_[0]


def concentration_study(
    potential: PotentialField,
    eps_values: Sequence[float],
    delta: float,
    strict: bool = True,
) -> ConcentrationTable:
    """Escape mass outside the delta-ball of the global minimum, per eps.

    Reports m(eps) = 1 - mass((x* - delta, x* + delta)) and the diagnostic
    eps * log m(eps), which tends to -2 * DeltaH with DeltaH the smaller of
    the two boundary barriers H(x* +- delta) - min H. With ``strict`` the
    study enforces what the asymptotics promise: m strictly decreasing in
    decreasing eps, and eps * log m within 20% of -2 DeltaH at the smallest
    eps. Flat barriers (constant potentials) have no rate; both checks are
    skipped and ``rate_ok`` is None.
    """
    eps_arr = np.asarray(list(eps_values), dtype=float)
    if eps_arr.size < 1:
        raise ValidationError("concentration study needs at least one eps")
    if not np.all(np.diff(eps_arr) < 0):
        raise ValidationError("eps_values must be strictly decreasing")
    if not (0 < delta < 0.5):
        raise ValidationError(f"delta must lie in (0, 1/2), got {delta}")

    center = _unique_global_minimum(potential)
    hb = evaluate_trig(potential.H, np.array([center.location - delta,
                                              center.location + delta]))
    h_min = min(float(evaluate_trig(potential.H, np.array([center.location]))[0]),
                float(potential.H.samples.min()))
    barrier = float(min(hb) - h_min)

    rows = []
    log_masses = []
    for eps in eps_arr:
        gibbs_density(potential, float(eps))  # grid-resolution guard
        log_out = _log_gibbs_integral(
            potential, float(eps), center.location + delta, center.location + 1.0 - delta
        )
        log_z = _log_gibbs_integral(potential, float(eps), 0.0, 1.0)
        logm = log_out - log_z
        log_masses.append(logm)
        rows.append(ConcentrationRow(
            epsilon=float(eps),
            outside_mass=float(np.exp(logm)),
            eps_times_log_mass=float(eps * logm),
        ))

    flat = barrier <= FLAT_BARRIER_TOL
    # compare in log domain; the linear masses underflow long before the
    # log-scale ordering degenerates
    monotone = bool(np.all(np.diff(np.asarray(log_masses)) < 0)) if eps_arr.size > 1 else True
    rate_ok: bool | None
    if flat:
        rate_ok = None
    else:
        target = -2.0 * barrier
        rate_ok = bool(abs(rows[-1].eps_times_log_mass - target) <= 0.2 * abs(target))

    if strict and not flat:
        if eps_arr.size > 1 and not monotone:
            raise ValidationError("outside-mass is not strictly decreasing in eps")
        if not rate_ok:
            raise ValidationError(
                f"eps*log m(eps) = {rows[-1].eps_times_log_mass:.4f} misses "
                f"-2*DeltaH = {-2.0 * barrier:.4f} by more than 20%"
            )
    return ConcentrationTable(
        rows=rows,
        delta=float(delta),
        center=center.location,
        barrier=barrier,
        monotone=monotone,
        rate_ok=rate_ok,
    )


@dataclass(frozen=True)
class Well:
    minimum: Extremum
    left_edge: float
    right_edge: float
    mass: float


def well_masses(potential: PotentialField, eps: float) -> list[Well]:
    """Gibbs mass per potential well.

    Wells are the arcs between consecutive refined local maxima of H, each
    containing one local minimum. A potential without interior maxima (one
    well, or constant) yields a single well carrying all the mass. For
    multiple global minima no selection is asserted: the zero-noise limit
    may weight them in any combination, so masses are reported as computed.
    """
    gd = gibbs_density(potential, eps)
    maxima = _refined_extrema(potential.H.samples, kind="max")
    if not maxima:
        m = potential.minima[0] if potential.minima else Extremum(0.0, float(potential.H.samples[0]), 0.0)
        return [Well(minimum=m, left_edge=0.0, right_edge=1.0, mass=1.0)]
    edges = [m.location for m in maxima]
    wells = []
    for i, left in enumerate(edges):
        right = edges[(i + 1) % len(edges)]
        right_unwrapped = right if right > left else right + 1.0
        inside = [m for m in potential.minima
                  if left < m.location < right_unwrapped
                  or left < m.location + 1.0 < right_unwrapped]
        mass = _mass_between(gd.density, left, right_unwrapped)
        minimum = min(inside, key=lambda m: m.value) if inside else Extremum(
            location=(left + right_unwrapped) / 2.0 % 1.0,
            value=float(np.min(potential.H.samples)),
            curvature=0.0,
        )
        wells.append(Well(minimum=minimum, left_edge=left, right_edge=right, mass=float(mass)))
    return wells
