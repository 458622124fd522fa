"""Calculus for smooth periodic functions sampled on uniform grids over [0,1).

The unit circle is discretized by n equispaced points x_i = i/n (n even).
Differentiation and antiderivatives are Fourier-collocation based, so they
are spectrally accurate for smooth periodic samples; integration is the
periodic trapezoid rule, which collapses to the plain mean of the samples.
A second-order central-difference derivative is kept alongside as an
independent cross-check.

Domain types wrap plain numpy arrays with the invariants the rest of the
package leans on: drifts are sign-definite (``FlowField1D``), diffusion
coefficients strictly positive (``DiffusionCoeff1D``).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import NonsingularityError, PositivityError, ValidationError

# |integral of f| above this means the antiderivative cannot be periodic
PERIODICITY_TOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [0,1): points x_i = i/n, x_n identified with x_0."""

    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ValidationError(f"grid needs n >= 8, got n={self.n}")
        if self.n % 2 != 0:
            raise ValidationError(f"grid needs even n, got n={self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n) / self.n


@dataclass(frozen=True)
class PeriodicField1D:
    """Samples of a smooth periodic function on a Grid1D.

    ``generator_rule`` optionally records the closed-form rule that produced
    the samples; resampling it on a refined grid reproduces the coarse
    samples at shared points exactly (i/n and 2i/(2n) are the same double).
    ``periodic`` is False only for antiderivatives of fields with nonzero
    mean, which pick up a linear ramp.
    """

    grid: Grid1D
    samples: np.ndarray
    generator_rule: "FieldRule | None" = None
    periodic: bool = True

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.shape != (self.grid.n,):
            raise ValidationError(
                f"samples shape {samples.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValidationError("field samples must all be finite")

    def resample(self, n: int) -> "PeriodicField1D":
        """Evaluate the generator rule on a new grid (requires a rule)."""
        if self.generator_rule is None:
            raise ValidationError("field has no generator rule; cannot resample")
        return field_from_rule(self.generator_rule, Grid1D(n))


@dataclass(frozen=True)
class FieldRule:
    """A named closed-form rule with parameters, used to generate samples.

    Instances are produced by :mod:`zeronoise.families`; keeping the rule on
    the field records provenance and allows exact resampling on finer grids.
    """

    name: str
    params: dict
    evaluate: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(np.asarray(x, dtype=float))


def field_from_rule(rule: FieldRule, grid: Grid1D) -> PeriodicField1D:
    return PeriodicField1D(grid, rule(grid.points), generator_rule=rule)


def field_from_samples(samples: Sequence[float], grid: Grid1D | None = None) -> PeriodicField1D:
    samples = np.asarray(samples, dtype=float)
    if grid is None:
        grid = Grid1D(samples.size)
    return PeriodicField1D(grid, samples)


@dataclass(frozen=True)
class FlowField1D:
    """A nonsingular drift on the circle, normalized to be positive.

    Sign-definite negative inputs are negated (coordinate reversal) with
    ``reversed_sign`` recording the flip; inputs with a sign change are
    rejected. ``alpha`` is the grid minimum of h.
    """

    field: PeriodicField1D
    alpha: float = dc_field(init=False)
    reversed_sign: bool = dc_field(init=False, default=False)

    def __post_init__(self):
        samples = self.field.samples
        if np.all(samples > 0):
            flipped = False
        elif np.all(samples < 0):
            rule = self.field.generator_rule
            neg_rule = None
            if rule is not None:
                neg_rule = FieldRule(
                    name=f"negated({rule.name})",
                    params=dict(rule.params),
                    evaluate=lambda x, r=rule: -r(x),
                )
            object.__setattr__(
                self,
                "field",
                PeriodicField1D(self.field.grid, -samples, generator_rule=neg_rule),
            )
            flipped = True
        else:
            raise NonsingularityError(
                "drift changes sign on the grid; a nonsingular flow needs "
                "min h > 0 or max h < 0"
            )
        object.__setattr__(self, "reversed_sign", flipped)
        object.__setattr__(self, "alpha", float(self.field.samples.min()))

    @property
    def grid(self) -> Grid1D:
        return self.field.grid


@dataclass(frozen=True)
class DiffusionCoeff1D:
    """Gamma = gamma^2, the squared noise coefficient; strictly positive."""

    gamma_sq: PeriodicField1D

    def __post_init__(self):
        if not np.all(self.gamma_sq.samples > 0):
            raise PositivityError("diffusion coefficient must satisfy min Gamma > 0")

    @property
    def grid(self) -> Grid1D:
        return self.gamma_sq.grid

    @property
    def gamma(self) -> np.ndarray:
        """Pointwise noise amplitude gamma = sqrt(Gamma)."""
        return np.sqrt(self.gamma_sq.samples)


# ---------------------------------------------------------------------------
# spectral calculus on raw sample arrays


def _check_samples(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValidationError("non-finite sample in field")
    return f


def deriv_samples(f: np.ndarray, order: int = 1) -> np.ndarray:
    """Fourier-collocation derivative of periodic samples.

    The Nyquist mode is zeroed for odd orders (its sampled derivative is
    indistinguishable from zero on the grid) and kept for even orders.
    """
    f = _check_samples(f)
    n = f.size
    fh = np.fft.rfft(f)
    k = 2j * np.pi * np.arange(n // 2 + 1)
    mult = k**order
    if order % 2 == 1:
        mult[-1] = 0.0
    return np.fft.irfft(fh * mult, n)


def antideriv_samples(f: np.ndarray) -> tuple[np.ndarray, float]:
    """Antiderivative F(x_i) = integral of f from 0 to x_i with F(0) = 0.

    Returns (F samples, mean of f). F is the mean ramp plus the Fourier
    antiderivative of the fluctuating part, so it is spectrally accurate;
    the Nyquist mode's true antiderivative samples to zero on the grid and
    is dropped.
    """
    f = _check_samples(f)
    n = f.size
    fh = np.fft.rfft(f)
    mean = fh[0].real / n
    k = 2j * np.pi * np.arange(n // 2 + 1)
    gh = np.zeros_like(fh)
    gh[1:-1] = fh[1:-1] / k[1:-1]
    G = np.fft.irfft(gh, n)
    x = np.arange(n) / n
    return mean * x + (G - G[0]), mean


def differentiate(f: PeriodicField1D) -> PeriodicField1D:
    """Spectral derivative f' on the same grid."""
    return PeriodicField1D(f.grid, deriv_samples(f.samples))


def differentiate_fd(f: PeriodicField1D) -> PeriodicField1D:
    """Second-order central-difference derivative, for cross-validation."""
    s = _check_samples(f.samples)
    d = (np.roll(s, -1) - np.roll(s, 1)) * (0.5 * f.grid.n)
    return PeriodicField1D(f.grid, d)


def integrate(f: PeriodicField1D) -> float:
    """Integral over the circle: periodic trapezoid = mean of samples."""
    return float(np.mean(_check_samples(f.samples)))


def cumulative_integral(f: PeriodicField1D) -> PeriodicField1D:
    """F with F(x_i) = integral of f on [0, x_i], F(x_0) = 0.

    F is periodic only when the full-circle integral vanishes; otherwise the
    returned field is flagged non-periodic (it carries a ramp of slope
    ``integrate(f)``). Despite living on the periodic grid type, the samples
    are exact partial integrals, good to spectral accuracy.
    """
    F, mean = antideriv_samples(f.samples)
    return PeriodicField1D(f.grid, F, periodic=bool(abs(mean) <= PERIODICITY_TOL))


def norm_l2(f: PeriodicField1D) -> float:
    """L2 norm via the periodic trapezoid rule on f^2."""
    s = _check_samples(f.samples)
    return float(np.sqrt(np.mean(s * s)))


def norm_sup(f: PeriodicField1D) -> float:
    return float(np.max(np.abs(_check_samples(f.samples))))


def shifted_samples(f: PeriodicField1D, offset: float) -> np.ndarray:
    """Trigonometric interpolation of f on the grid shifted by ``offset``.

    Equivalent to evaluating the band-limited interpolant at x_i + offset;
    used by quadrature routines that need off-grid values.
    """
    s = _check_samples(f.samples)
    n = s.size
    fh = np.fft.rfft(s)
    k = 2j * np.pi * np.arange(n // 2 + 1)
    return np.fft.irfft(fh * np.exp(k * offset), n)


def evaluate_trig(f: PeriodicField1D, x: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of f at arbitrary points."""
    s = _check_samples(f.samples)
    n = s.size
    fh = np.fft.rfft(s) / n
    # real cosine/sine series; Nyquist contributes cos(pi n x) with half weight
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, fh[0].real)
    for k in range(1, n // 2):
        ang = 2.0 * np.pi * k * x
        out += 2.0 * (fh[k].real * np.cos(ang) - fh[k].imag * np.sin(ang))
    out += fh[n // 2].real * np.cos(np.pi * n * x)
    return out
