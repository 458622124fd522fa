"""Periodic fields on the square torus [0,1)^2 and their spectral partials.

Mirrors the 1-D module: square uniform grids, Fourier-collocation partial
derivatives (Nyquist modes zeroed for odd orders), integration by the
periodic trapezoid rule (the plain mean). Index convention: axis 0 is x,
axis 1 is y, so samples[i, j] = f(i/n, j/n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .families import FieldRule2D


@dataclass(frozen=True)
class Grid2D:
    """Uniform product grid on [0,1)^2 with n points per axis."""

    n: int

    def __post_init__(self):
        if self.n < 32:
            raise ValidationError(f"torus grid needs n >= 32, got n={self.n}")
        if self.n % 2 != 0:
            raise ValidationError(f"torus grid needs even n, got n={self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.points
        return np.meshgrid(x, x, indexing="ij")


@dataclass(frozen=True)
class PeriodicField2D:
    """Samples of a smooth doubly periodic function on a Grid2D."""

    grid: Grid2D
    samples: np.ndarray
    generator_rule: FieldRule2D | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.shape != (self.grid.n, self.grid.n):
            raise ValidationError(
                f"samples shape {samples.shape} does not match grid "
                f"({self.grid.n}, {self.grid.n})"
            )
        if not np.all(np.isfinite(samples)):
            raise ValidationError("field samples must all be finite")


def field_from_rule_2d(rule: FieldRule2D, grid: Grid2D) -> PeriodicField2D:
    X, Y = grid.meshes()
    return PeriodicField2D(grid, rule(X, Y), generator_rule=rule)


def constant_field_2d(grid: Grid2D, value: float) -> PeriodicField2D:
    return PeriodicField2D(grid, np.full((grid.n, grid.n), float(value)))


def partial_samples(f: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Fourier-collocation partial derivative along one axis."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = (2j * np.pi * k) ** order
    if order % 2 == 1:
        mult[n // 2] = 0.0
    shape = [1, 1]
    shape[axis] = n
    fh = np.fft.fft(f, axis=axis) * mult.reshape(shape)
    return np.fft.ifft(fh, axis=axis).real


def partial_x(f: PeriodicField2D, order: int = 1) -> PeriodicField2D:
    return PeriodicField2D(f.grid, partial_samples(f.samples, axis=0, order=order))


def partial_y(f: PeriodicField2D, order: int = 1) -> PeriodicField2D:
    return PeriodicField2D(f.grid, partial_samples(f.samples, axis=1, order=order))


def integrate_2d(f: PeriodicField2D) -> float:
    return float(np.mean(f.samples))


def norm_sup_2d(f: PeriodicField2D) -> float:
    return float(np.max(np.abs(f.samples)))
