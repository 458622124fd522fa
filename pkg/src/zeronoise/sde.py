"""Monte Carlo side: simulate the circle SDE and histogram the occupation.

The process is dx = h(x) dt + sqrt(eps) gamma(x) dW, read in the
Stratonovich sense; the workhorse integrator is the Heun predictor-corrector
step, which is weakly consistent with that convention. A plain Euler step
(Ito) and an Euler step with the (eps/4) Gamma' correction are available to
demonstrate that the convention matters when gamma varies.

Reproducibility contract: trajectory t draws from
``default_rng(SeedSequence(entropy=seed, spawn_key=(t,)))``. The first
uniform draw is the initial state; every subsequent standard normal is
consumed in step order. Chunked execution advances the same stream, so the
output is bit-identical regardless of chunk size or how trajectories are
scheduled (bin counts are integers and merge commutatively).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .circle import Density, StationarySolution, solve_stationary_quadrature
from .errors import ValidationError
from .fields import (
    DiffusionCoeff1D,
    FlowField1D,
    PeriodicField1D,
    antideriv_samples,
    deriv_samples,
    evaluate_trig,
)

# setup-time stability guard: dt * sup|h| must not exceed this
DT_DRIFT_CAP = 0.1
MIN_BINS = 16
MASS_SUM_TOL = 1e-12
# harmonics below this relative size are dropped from kernel series
SERIES_PRUNE_TOL = 1e-14
_DEFAULT_CHUNK = 1 << 16

_SCHEMES = {
    "heun": _kernels.SCHEME_HEUN,
    "euler_ito": _kernels.SCHEME_EULER_ITO,
    "euler_strat": _kernels.SCHEME_EULER_STRAT,
}


@dataclass(frozen=True)
class SdeConfig:
    """Ensemble simulation parameters.

    ``burn_in=None`` resolves to 10% of ``n_steps``. ``seed`` is the master
    seed; per-trajectory streams are derived from (seed, trajectory index).
    """

    dt: float
    n_steps: int
    burn_in: int | None = None
    n_trajectories: int = 1
    seed: int = 0
    bins: int = 64

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be positive and finite, got {self.dt}")
        if self.n_steps < 1:
            raise ValidationError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.n_steps // 10)
        if not 0 <= self.burn_in < self.n_steps:
            raise ValidationError(
                f"burn_in must satisfy 0 <= burn_in < n_steps, got "
                f"burn_in={self.burn_in}, n_steps={self.n_steps}"
            )
        if self.n_trajectories < 1:
            raise ValidationError(
                f"n_trajectories must be >= 1, got {self.n_trajectories}"
            )
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit nonnegative integer, got {self.seed}")
        if self.bins < MIN_BINS:
            raise ValidationError(f"bins must be >= {MIN_BINS}, got {self.bins}")

    @property
    def kept_steps(self) -> int:
        return self.n_steps - self.burn_in


@dataclass(frozen=True)
class OccupationMeasure:
    """Normalized histogram of post-burn-in states.

    1-D measures have ``masses`` of shape (bins,); product measures on the
    torus have shape (bins, bins) with the same edges per axis. ``counts``
    keeps the raw integer histogram so measures merge exactly.
    """

    bin_edges: np.ndarray
    masses: np.ndarray
    total_time: float
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "counts", counts)
        bins = edges.size - 1
        if masses.shape not in ((bins,), (bins, bins)):
            raise ValidationError(
                f"masses shape {masses.shape} does not match {bins} bins"
            )
        if counts.shape != masses.shape:
            raise ValidationError("counts and masses shapes differ")
        if np.any(masses < 0):
            raise ValidationError("histogram masses must be nonnegative")
        if abs(masses.sum() - 1.0) > MASS_SUM_TOL:
            raise ValidationError(
                f"histogram masses sum to {masses.sum():.17g}, not 1"
            )
        if self.total_time <= 0:
            raise ValidationError("total_time must be positive")

    @property
    def bins(self) -> int:
        return self.bin_edges.size - 1

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


# ---------------------------------------------------------------------------
# trig series plumbing for the kernels


def _series(samples: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Pruned cosine/sine coefficients of the trig interpolant of samples."""
    s = np.asarray(samples, dtype=float)
    n = s.size
    fh = np.fft.rfft(s) / n
    a0 = float(fh[0].real)
    ac = 2.0 * fh[1:].real
    asn = -2.0 * fh[1:].imag
    ac[-1] = fh[-1].real  # Nyquist cosine enters with half weight
    asn[-1] = 0.0
    mag = np.abs(ac) + np.abs(asn)
    scale = max(abs(a0), float(mag.max(initial=0.0)), np.finfo(float).tiny)
    keep = np.nonzero(mag > SERIES_PRUNE_TOL * scale)[0]
    k_max = int(keep[-1]) + 1 if keep.size else 0
    return a0, np.ascontiguousarray(ac[:k_max]), np.ascontiguousarray(asn[:k_max])


def _derivative_series(ac: np.ndarray, asn: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    k = 2.0 * np.pi * np.arange(1, ac.size + 1)
    return 0.0, np.ascontiguousarray(k * asn), np.ascontiguousarray(-k * ac)


def _series_2d(samples: np.ndarray) -> tuple[np.ndarray, ...]:
    """Integer wavenumbers and complex amplitudes of a 2-D trig interpolant.

    Terms include both members of each conjugate pair, so summing
    Re(c exp(2 pi i (kx x + ky y))) over all of them is real and complete.
    """
    s = np.asarray(samples, dtype=float)
    nx, ny = s.shape
    c = np.fft.fft2(s) / (nx * ny)
    kx = np.fft.fftfreq(nx, d=1.0 / nx).astype(np.int64)
    ky = np.fft.fftfreq(ny, d=1.0 / ny).astype(np.int64)
    scale = max(float(np.abs(c).max()), np.finfo(float).tiny)
    ix, iy = np.nonzero(np.abs(c) > SERIES_PRUNE_TOL * scale)
    return (
        kx[ix].astype(np.float64),
        ky[iy].astype(np.float64),
        np.ascontiguousarray(c[ix, iy].real),
        np.ascontiguousarray(c[ix, iy].imag),
    )


def _drift_field(h) -> PeriodicField1D:
    if isinstance(h, FlowField1D):
        return h.field
    if isinstance(h, PeriodicField1D):
        return h
    raise ValidationError(f"unsupported drift type {type(h).__name__}")


def _trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _check_stability(dt: float, h_sup: float):
    if dt * h_sup > DT_DRIFT_CAP:
        raise ValidationError(
            f"dt*sup|h| = {dt * h_sup:.3g} exceeds the stability cap "
            f"{DT_DRIFT_CAP}; reduce dt to at most {DT_DRIFT_CAP / max(h_sup, np.finfo(float).tiny):.3g}"
        )


# ---------------------------------------------------------------------------
# stepping


def step_stratonovich_heun(x, h, gamma, eps: float, dt: float, noise) -> np.ndarray:
    """One Heun step for an array of states; the numpy reference path.

    ``gamma=None`` (or eps=0) switches the noise term off. The compiled
    ensemble driver reproduces this map step for step; this version exists
    for tests and one-off use.
    """
    if not (np.isfinite(eps) and eps >= 0):
        raise ValidationError(f"eps must be nonnegative, got {eps}")
    hf = _drift_field(h)
    _check_stability(dt, float(np.max(np.abs(hf.samples))))
    x = np.asarray(x, dtype=float)
    dw = np.sqrt(dt) * np.asarray(noise, dtype=float)
    amp = np.sqrt(eps)

    def gamma_at(pts):
        if gamma is None or eps == 0.0:
            return np.zeros_like(pts)
        return np.sqrt(evaluate_trig(gamma.gamma_sq, pts))

    h0 = evaluate_trig(hf, x)
    g0 = gamma_at(x)
    pred = x + h0 * dt + amp * g0 * dw
    h1 = evaluate_trig(hf, pred)
    g1 = gamma_at(pred)
    out = x + 0.5 * (h0 + h1) * dt + 0.5 * amp * (g0 + g1) * dw
    return out - np.floor(out)


def occupation_measure(
    h,
    gamma: DiffusionCoeff1D | None,
    eps: float,
    config: SdeConfig,
    scheme: str = "heun",
    trajectory_range: tuple[int, int] | None = None,
    chunk_steps: int = _DEFAULT_CHUNK,
) -> OccupationMeasure:
    """Run the ensemble and histogram every post-burn-in state.

    ``trajectory_range=(a, b)`` simulates only ensemble members a..b-1; their
    streams depend on the index alone, so merging the integer counts of
    disjoint ranges reproduces the full-ensemble histogram exactly.
    """
    if not (np.isfinite(eps) and eps >= 0):
        raise ValidationError(f"eps must be nonnegative, got {eps}")
    if scheme not in _SCHEMES:
        raise ValidationError(
            f"unknown scheme {scheme!r}; expected one of {sorted(_SCHEMES)}"
        )
    hf = _drift_field(h)
    if gamma is None:
        if eps > 0:
            raise ValidationError("eps > 0 requires a diffusion coefficient")
        g_series = (1.0, np.zeros(0), np.zeros(0))
    else:
        if gamma.grid.n != hf.grid.n:
            raise ValidationError(
                f"drift grid n={hf.grid.n} and diffusion grid n={gamma.grid.n} differ"
            )
        g_series = _series(gamma.gamma_sq.samples)
    _check_stability(config.dt, float(np.max(np.abs(hf.samples))))

    h_series = _series(hf.samples)
    d_series = _derivative_series(g_series[1], g_series[2])
    lo, hi = trajectory_range if trajectory_range is not None else (0, config.n_trajectories)
    if not 0 <= lo < hi <= config.n_trajectories:
        raise ValidationError(f"trajectory_range {(lo, hi)} out of bounds")

    rngs = [_trajectory_rng(config.seed, t) for t in range(lo, hi)]
    x = np.array([rng.random() for rng in rngs])
    counts = np.zeros(config.bins, dtype=np.int64)
    sqrt_eps = np.sqrt(eps)
    done = 0
    while done < config.n_steps:
        m = min(chunk_steps, config.n_steps - done)
        noise = np.empty((len(rngs), m))
        for i, rng in enumerate(rngs):
            noise[i] = rng.standard_normal(m)
        skip = int(np.clip(config.burn_in - done, 0, m))
        _kernels.step_chunk_1d(
            x, noise, config.dt, sqrt_eps,
            h_series[0], h_series[1], h_series[2],
            g_series[0], g_series[1], g_series[2],
            d_series[0], d_series[1], d_series[2],
            _SCHEMES[scheme], counts, config.bins, skip,
        )
        done += m

    expected = (hi - lo) * config.kept_steps
    total = int(counts.sum())
    if total != expected:
        raise ValidationError(
            f"histogram holds {total} samples, expected {expected}"
        )
    edges = np.linspace(0.0, 1.0, config.bins + 1)
    return OccupationMeasure(
        bin_edges=edges,
        masses=counts / total,
        total_time=expected * config.dt,
        counts=counts,
    )


def occupation_measure_2d(
    h1_samples: np.ndarray,
    h2_samples: np.ndarray,
    gamma_matrix: np.ndarray | None,
    eps: float,
    config: SdeConfig,
    chunk_steps: int = _DEFAULT_CHUNK,
) -> OccupationMeasure:
    """Torus ensemble driver (Heun; constant 2x2 diffusion matrix).

    With a homogeneous gamma the Stratonovich correction vanishes, so Heun
    only averages the drift. Initial states are uniform on the torus (first
    two uniforms of each trajectory stream); noise increments use the lower
    Cholesky factor of the matrix.
    """
    if not (np.isfinite(eps) and eps >= 0):
        raise ValidationError(f"eps must be nonnegative, got {eps}")
    h1 = np.asarray(h1_samples, dtype=float)
    h2 = np.asarray(h2_samples, dtype=float)
    if h1.shape != h2.shape or h1.ndim != 2:
        raise ValidationError("drift component grids differ or are not 2-D")
    if gamma_matrix is None:
        if eps > 0:
            raise ValidationError("eps > 0 requires a diffusion matrix")
        gam = np.zeros((2, 2))
    else:
        gmat = np.asarray(gamma_matrix, dtype=float)
        if gmat.shape != (2, 2) or not np.allclose(gmat, gmat.T, atol=1e-14):
            raise ValidationError("diffusion matrix must be symmetric 2x2")
        gam = np.linalg.cholesky(gmat)  # raises on non-SPD input
    h_sup = max(float(np.max(np.abs(h1))), float(np.max(np.abs(h2))))
    _check_stability(config.dt, h_sup)

    t1 = _series_2d(h1)
    t2 = _series_2d(h2)
    rngs = [_trajectory_rng(config.seed, t) for t in range(config.n_trajectories)]
    xy = np.array([rng.random(2) for rng in rngs])
    counts = np.zeros((config.bins, config.bins), dtype=np.int64)
    sqrt_eps = np.sqrt(eps)
    done = 0
    while done < config.n_steps:
        m = min(chunk_steps, config.n_steps - done)
        noise = np.empty((len(rngs), m, 2))
        for i, rng in enumerate(rngs):
            noise[i] = rng.standard_normal((m, 2))
        skip = int(np.clip(config.burn_in - done, 0, m))
        _kernels.heun_chunk_2d(
            xy, noise, config.dt, sqrt_eps,
            t1[0], t1[1], t1[2], t1[3],
            t2[0], t2[1], t2[2], t2[3],
            gam[0, 0], gam[0, 1], gam[1, 0], gam[1, 1],
            counts, config.bins, skip,
        )
        done += m

    expected = config.n_trajectories * config.kept_steps
    total = int(counts.sum())
    if total != expected:
        raise ValidationError(f"histogram holds {total} samples, expected {expected}")
    edges = np.linspace(0.0, 1.0, config.bins + 1)
    return OccupationMeasure(
        bin_edges=edges,
        masses=counts / total,
        total_time=expected * config.dt,
        counts=counts,
    )


def merge_measures(measures: list[OccupationMeasure]) -> OccupationMeasure:
    """Pool integer counts of measures over disjoint trajectory ranges."""
    if not measures:
        raise ValidationError("nothing to merge")
    edges = measures[0].bin_edges
    for m in measures[1:]:
        if m.bin_edges.shape != edges.shape or not np.array_equal(m.bin_edges, edges):
            raise ValidationError("measures use different bin edges")
    counts = sum(m.counts for m in measures)
    total = int(counts.sum())
    return OccupationMeasure(
        bin_edges=edges,
        masses=counts / total,
        total_time=sum(m.total_time for m in measures),
        counts=counts,
    )


# ---------------------------------------------------------------------------
# comparing measures with densities


def zero_drift_density(gamma: DiffusionCoeff1D, convention: str = "stratonovich") -> Density:
    """Stationary density of dx = sqrt(eps) gamma(x) dW, any eps > 0.

    The Stratonovich equation is in detailed balance with density
    proportional to 1/gamma; reading the same equation in the Ito sense
    gives constant Gamma*rho, i.e. density proportional to 1/Gamma. The two
    differ whenever gamma varies, which is what the convention-distinction
    test exploits.
    """
    if convention == "stratonovich":
        w = 1.0 / gamma.gamma
    elif convention == "ito":
        w = 1.0 / gamma.gamma_sq.samples
    else:
        raise ValidationError(
            f"unknown convention {convention!r}; expected 'stratonovich' or 'ito'"
        )
    rho = w / np.mean(w)
    return Density(PeriodicField1D(gamma.grid, rho))


def scheme_reference_density(
    h,
    gamma: DiffusionCoeff1D,
    eps: float,
    scheme: str = "heun",
) -> StationarySolution:
    """PDE stationary solution matching an integrator's convention.

    The Stratonovich equation equals the Ito equation with drift
    h + (eps/4) Gamma', so Heun-simulated ensembles are referenced against
    the quadrature solution for that corrected drift; plain Euler against
    the uncorrected one. For constant Gamma the two coincide.
    """
    if scheme not in _SCHEMES:
        raise ValidationError(
            f"unknown scheme {scheme!r}; expected one of {sorted(_SCHEMES)}"
        )
    hf = _drift_field(h)
    if scheme == "euler_ito":
        drift = hf
    else:
        corrected = hf.samples + 0.25 * eps * deriv_samples(gamma.gamma_sq.samples)
        drift = PeriodicField1D(hf.grid, corrected)
    return solve_stationary_quadrature(drift, gamma, eps)


def bin_masses(density: Density, bin_edges: np.ndarray) -> np.ndarray:
    """Exact masses of a density between consecutive edges.

    Uses the spectral antiderivative of the samples evaluated at the edges
    by trigonometric interpolation, so the result is spectrally accurate
    rather than O(bins^-2).
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError("bin edges must be strictly increasing")
    F, mean = antideriv_samples(density.samples)
    periodic_part = PeriodicField1D(density.grid, F - mean * density.grid.points)
    cum = mean * edges + evaluate_trig(periodic_part, edges)
    return np.diff(cum)


def l1_distance(measure: OccupationMeasure, density: Density) -> float:
    """L1 distance between the histogram and the density's bin masses."""
    if measure.masses.ndim != 1:
        raise ValidationError("l1_distance expects a 1-D occupation measure")
    ref = bin_masses(density, measure.bin_edges)
    return float(np.abs(measure.masses - ref).sum())


def l1_to_uniform_2d(measure: OccupationMeasure) -> float:
    if measure.masses.ndim != 2:
        raise ValidationError("expected a product (torus) occupation measure")
    return float(np.abs(measure.masses - 1.0 / measure.masses.size).sum())


def default_test_functions(n: int = 64, max_degree: int = 8) -> list[PeriodicField1D]:
    """Trigonometric polynomials cos/sin(2 pi k x), k = 1..max_degree."""
    from .families import make_rule
    from .fields import Grid1D, field_from_rule

    grid = Grid1D(n)
    fns = []
    for k in range(1, max_degree + 1):
        fns.append(field_from_rule(make_rule("offset_cos", offset=0.0, amplitude=1.0, harmonic=k), grid))
        fns.append(field_from_rule(make_rule("offset_sin", offset=0.0, amplitude=1.0, harmonic=k), grid))
    return fns


def _integral_against(obj, phi: PeriodicField1D) -> float:
    """integral of phi against an OccupationMeasure or a Density."""
    if isinstance(obj, Density):
        vals = evaluate_trig(phi, obj.grid.points) if obj.grid.n != phi.grid.n else phi.samples
        return float(np.mean(vals * obj.samples))
    if isinstance(obj, OccupationMeasure):
        if obj.masses.ndim != 1:
            raise ValidationError("weak probe supports 1-D measures only")
        # exact bin averages of phi, so a piecewise-constant measure is
        # integrated without midpoint bias
        Phi, mean = antideriv_samples(phi.samples)
        periodic_part = PeriodicField1D(phi.grid, Phi - mean * phi.grid.points)
        cum = mean * obj.bin_edges + evaluate_trig(periodic_part, obj.bin_edges)
        avg = np.diff(cum) / np.diff(obj.bin_edges)
        return float(np.sum(obj.masses * avg))
    raise ValidationError(f"cannot integrate against {type(obj).__name__}")


def weak_gaps(obj, reference: Density, test_functions=None) -> list[float]:
    """|integral phi d(obj) - integral phi d(reference)| per test function."""
    if test_functions is None:
        test_functions = default_test_functions(reference.grid.n)
    return [
        abs(_integral_against(obj, phi) - _integral_against(reference, phi))
        for phi in test_functions
    ]


def weak_convergence_probe(measures, reference: Density, test_functions=None) -> list[float]:
    """Max weak gap to the reference for each measure (or density) given."""
    if test_functions is None:
        test_functions = default_test_functions(reference.grid.n)
    return [max(weak_gaps(m, reference, test_functions)) for m in measures]
