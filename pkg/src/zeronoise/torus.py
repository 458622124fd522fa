"""Volume-preserving flows on the 2-torus under homogeneous diffusion.

Divergence-free drifts are built from stream functions (or as constant
fields), which makes ``div h = 0`` hold to spectral accuracy by
construction. For a constant SPD diffusion matrix the stationary equation

    (eps/2) Gamma : grad grad rho - h . grad rho = 0,   integral rho = 1,

is discretized in advective form; because the difference operators
annihilate constants, the uniform density is an exact fixed point of the
discrete operator, mirroring the continuum statement that volume is
stationary for every eps. ``rigidity_check`` solves the homogeneous
constrained system for the deviation r and confirms the zero solution,
together with the discrete energy identities that force it.

The one deliberately inhomogeneous path (a scalar coefficient field times
the identity) uses the conservative divergence form throughout and shows
the uniform density is then lost; no bound is asserted there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .circle import NEGATIVE_CLAMP_TOL, _condition_estimate
from .errors import SolverFailureError, ValidationError
from .fields2d import Grid2D, PeriodicField2D, partial_samples
from .sde import OccupationMeasure, SdeConfig, l1_to_uniform_2d, occupation_measure_2d

DIVERGENCE_TOL = 1e-8
DENSITY2D_MASS_TOL = 1e-10
RIGIDITY_TOL = 1e-8


@dataclass(frozen=True)
class StreamFunction2D:
    """Scalar stream function; its induced field is divergence-free."""

    psi: PeriodicField2D

    @property
    def grid(self) -> Grid2D:
        return self.psi.grid


@dataclass(frozen=True)
class TorusField2D:
    """Drift on the torus with certified (numerically) zero divergence."""

    h1: PeriodicField2D
    h2: PeriodicField2D
    divergence_sup: float = 0.0

    def __post_init__(self):
        if self.h1.grid.n != self.h2.grid.n:
            raise ValidationError("drift components live on different grids")
        div = partial_samples(self.h1.samples, axis=0) + partial_samples(
            self.h2.samples, axis=1
        )
        div_sup = float(np.max(np.abs(div)))
        object.__setattr__(self, "divergence_sup", div_sup)
        if div_sup > DIVERGENCE_TOL:
            raise ValidationError(
                f"spectral divergence sup {div_sup:.3e} exceeds {DIVERGENCE_TOL}; "
                "construct drifts from stream functions or constants"
            )

    @property
    def grid(self) -> Grid2D:
        return self.h1.grid

    @property
    def sup(self) -> float:
        return max(
            float(np.max(np.abs(self.h1.samples))),
            float(np.max(np.abs(self.h2.samples))),
        )


@dataclass(frozen=True)
class Density2D:
    """Strictly positive probability density on the torus grid."""

    field: PeriodicField2D

    def __post_init__(self):
        s = self.field.samples
        if not np.all(s > 0):
            raise ValidationError("density samples must be strictly positive")
        mass = float(np.mean(s))
        if abs(mass - 1.0) > DENSITY2D_MASS_TOL:
            raise ValidationError(f"density mass {mass!r} deviates from 1 beyond 1e-10")

    @property
    def samples(self) -> np.ndarray:
        return self.field.samples

    @property
    def grid(self) -> Grid2D:
        return self.field.grid


def field_from_stream(psi: StreamFunction2D) -> TorusField2D:
    """h = (d psi/dy, -d psi/dx); mixed partials commute, so div h = 0."""
    h1 = partial_samples(psi.psi.samples, axis=1)
    h2 = -partial_samples(psi.psi.samples, axis=0)
    return TorusField2D(
        h1=PeriodicField2D(psi.grid, h1),
        h2=PeriodicField2D(psi.grid, h2),
    )


def constant_field(grid: Grid2D, vx: float, vy: float) -> TorusField2D:
    """Constant drift (vx, vy); the stream function alpha y - beta x is not
    periodic, so constants get their own constructor."""
    shape = (grid.n, grid.n)
    return TorusField2D(
        h1=PeriodicField2D(grid, np.full(shape, float(vx))),
        h2=PeriodicField2D(grid, np.full(shape, float(vy))),
    )


# ---------------------------------------------------------------------------
# finite-difference operators (row-major flattening: index = i*n + j, i = x)


def _d1(n: int) -> sp.csr_matrix:
    ones = np.ones(n)
    D = sp.diags([ones, -ones], [1, -1], shape=(n, n), format="lil")
    D[0, n - 1] = -1.0
    D[n - 1, 0] = 1.0
    return D.tocsr() * (0.5 * n)


def _d2(n: int) -> sp.csr_matrix:
    ones = np.ones(n)
    D = sp.diags([ones, -2.0 * ones, ones], [1, 0, -1], shape=(n, n), format="lil")
    D[0, n - 1] = 1.0
    D[n - 1, 0] = 1.0
    return D.tocsr() * float(n * n)


def _check_gamma_matrix(gamma: np.ndarray) -> np.ndarray:
    g = np.asarray(gamma, dtype=float)
    if g.shape != (2, 2) or not np.allclose(g, g.T, atol=1e-14):
        raise ValidationError("diffusion matrix must be symmetric 2x2")
    if np.any(np.linalg.eigvalsh(g) <= 0):
        raise ValidationError("diffusion matrix must be positive definite")
    return g


def fd_operator_2d(h: TorusField2D, gamma: np.ndarray, eps: float) -> sp.csr_matrix:
    """Advective-form operator (eps/2) Gamma:grad grad - h.grad on the grid.

    Valid because div h = 0; every term annihilates constants, so the
    uniform density is an exact discrete solution.
    """
    g = _check_gamma_matrix(gamma)
    n = h.grid.n
    I = sp.identity(n, format="csr")
    D1, D2 = _d1(n), _d2(n)
    Dx = sp.kron(D1, I, format="csr")
    Dy = sp.kron(I, D1, format="csr")
    Dxx = sp.kron(D2, I, format="csr")
    Dyy = sp.kron(I, D2, format="csr")
    Dxy = sp.kron(D1, D1, format="csr")
    diff = 0.5 * eps * (g[0, 0] * Dxx + 2.0 * g[0, 1] * Dxy + g[1, 1] * Dyy)
    adv = sp.diags(h.h1.samples.ravel()) @ Dx + sp.diags(h.h2.samples.ravel()) @ Dy
    return (diff - adv).tocsr()


def _solve_replaced(A: sp.csr_matrix, n_total: int, rhs0: float) -> np.ndarray:
    M = A.tolil()
    M[0, :] = 1.0 / n_total
    M = M.tocsc()
    rhs = np.zeros(n_total)
    rhs[0] = rhs0
    try:
        sol = spla.splu(M).solve(rhs)
    except RuntimeError as exc:
        raise SolverFailureError(
            f"torus system is singular: {exc}",
            condition_estimate=_condition_estimate(M.tocsr()),
        ) from exc
    if not np.all(np.isfinite(sol)):
        raise SolverFailureError(
            "torus solve produced non-finite values",
            condition_estimate=_condition_estimate(M.tocsr()),
        )
    return sol


def solve_stationary_fd_2d(
    h: TorusField2D,
    gamma: np.ndarray,
    eps: float,
    n: int | None = None,
) -> Density2D:
    """Stationary density under homogeneous diffusion (central differences).

    Same row-replacement normalization and clamping policy as the 1-D
    finite-difference solver.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    ngrid = h.grid.n
    if n is not None and int(n) != ngrid:
        raise ValidationError(f"requested n={n} but fields are sampled on n={ngrid}")
    A = fd_operator_2d(h, gamma, eps)
    rho = _solve_replaced(A, ngrid * ngrid, rhs0=1.0)

    replaced_residual = float(abs((A @ rho)[0]))
    if replaced_residual > 1e-8:
        raise SolverFailureError(
            f"replaced normalization row has residual {replaced_residual:.3e} > 1e-8",
            condition_estimate=_condition_estimate(A),
        )
    lo = float(rho.min())
    if lo <= 0:
        if lo < -NEGATIVE_CLAMP_TOL:
            raise SolverFailureError(
                f"density has negative samples down to {lo:.3e}",
                condition_estimate=_condition_estimate(A),
            )
        rho = np.clip(rho, np.finfo(float).tiny, None)
        rho = rho / np.mean(rho)
    return Density2D(PeriodicField2D(h.grid, rho.reshape(ngrid, ngrid)))


def solve_stationary_fd_2d_scalar_gamma(
    h: TorusField2D,
    gamma_scalar: PeriodicField2D,
    eps: float,
) -> Density2D:
    """Inhomogeneous contrast: Gamma(x) = g(x) * identity, divergence form.

    (eps/2) Laplacian(g rho) - div(h rho) = 0. Both terms are conservative
    (matrix columns sum to zero), so the replaced-row residual check is
    valid; the uniform density is no longer an exact solution, which is the
    point of this experiment.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    n = h.grid.n
    if gamma_scalar.grid.n != n:
        raise ValidationError("coefficient field and drift grids differ")
    g = gamma_scalar.samples.ravel()
    if np.any(g <= 0):
        raise ValidationError("scalar diffusion coefficient must be positive")
    I = sp.identity(n, format="csr")
    D1, D2 = _d1(n), _d2(n)
    Dx = sp.kron(D1, I, format="csr")
    Dy = sp.kron(I, D1, format="csr")
    lap = sp.kron(D2, I, format="csr") + sp.kron(I, D2, format="csr")
    A = 0.5 * eps * (lap @ sp.diags(g)) - (
        Dx @ sp.diags(h.h1.samples.ravel()) + Dy @ sp.diags(h.h2.samples.ravel())
    )
    rho = _solve_replaced(A.tocsr(), n * n, rhs0=1.0)
    replaced_residual = float(abs((A @ rho)[0]))
    if replaced_residual > 1e-8:
        raise SolverFailureError(
            f"replaced normalization row has residual {replaced_residual:.3e} > 1e-8",
            condition_estimate=_condition_estimate(A.tocsr()),
        )
    lo = float(rho.min())
    if lo <= 0:
        if lo < -NEGATIVE_CLAMP_TOL:
            raise SolverFailureError(
                f"density has negative samples down to {lo:.3e}",
                condition_estimate=_condition_estimate(A.tocsr()),
            )
        rho = np.clip(rho, np.finfo(float).tiny, None)
        rho = rho / np.mean(rho)
    return Density2D(PeriodicField2D(h.grid, rho.reshape(n, n)))


def nonuniformity_contrast(
    h: TorusField2D, gamma_scalar: PeriodicField2D, eps: float
) -> float:
    """L1 deviation from uniform of the inhomogeneous stationary density."""
    rho = solve_stationary_fd_2d_scalar_gamma(h, gamma_scalar, eps)
    return float(np.mean(np.abs(rho.samples - 1.0)))


# ---------------------------------------------------------------------------
# rigidity of the deviation equation


@dataclass(frozen=True)
class RigidityVerdict:
    """Outcome of solving the homogeneous deviation system directly.

    The discrete energy identities are evaluated on the computed deviation:
    the advective energy integral of (h r).grad r (zero by antisymmetry)
    and the Dirichlet energy integral of |grad r|^2 (zero only if r is
    constant, hence zero under the mean constraint). ``condition_estimate``
    is populated only on failure, so artifacts are never silently passed.
    """

    epsilon: float
    solution_sup: float
    advective_energy: float
    dirichlet_energy: float
    passed: bool
    condition_estimate: float | None = None


def rigidity_check(h: TorusField2D, eps: float, n: int | None = None) -> RigidityVerdict:
    """Solve (eps/2) Lap r - h.grad r = 0 with integral r = 0; expect r = 0."""
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    ngrid = h.grid.n
    if n is not None and int(n) != ngrid:
        raise ValidationError(f"requested n={n} but fields are sampled on n={ngrid}")
    A = fd_operator_2d(h, np.eye(2), eps)
    r = _solve_replaced(A, ngrid * ngrid, rhs0=0.0)
    r2 = r.reshape(ngrid, ngrid)
    rx = partial_samples(r2, axis=0)
    ry = partial_samples(r2, axis=1)
    advective = float(abs(np.mean(h.h1.samples * r2 * rx + h.h2.samples * r2 * ry)))
    dirichlet = float(np.mean(rx * rx + ry * ry))
    sup = float(np.max(np.abs(r2)))
    passed = sup <= RIGIDITY_TOL and advective <= RIGIDITY_TOL and dirichlet <= RIGIDITY_TOL
    return RigidityVerdict(
        epsilon=float(eps),
        solution_sup=sup,
        advective_energy=advective,
        dirichlet_energy=dirichlet,
        passed=passed,
        condition_estimate=None if passed else _condition_estimate(A),
    )


# ---------------------------------------------------------------------------
# Monte Carlo probe


@dataclass(frozen=True)
class ZeroNoiseReport2D:
    """L1 distances of torus occupation measures to uniform, per eps."""

    eps_values: np.ndarray
    l1_distances: list[float]
    tolerance: float
    passed: bool
    measures: list[OccupationMeasure]


def zero_noise_probe_2d(
    h: TorusField2D,
    gamma: np.ndarray,
    eps_values,
    config: SdeConfig,
    tolerance: float = 0.05,
    strict: bool = True,
) -> ZeroNoiseReport2D:
    """Ensemble occupation vs the uniform law for each eps.

    Initial states are uniformly seeded, so non-ergodic flows (cellular
    stream functions) are probed ensemble-wise; the stationary law is
    exactly uniform for every eps, so distances must sit at the Monte Carlo
    noise floor independent of eps.
    """
    g = _check_gamma_matrix(gamma)
    eps_arr = np.asarray(list(eps_values), dtype=float)
    if eps_arr.size == 0:
        raise ValidationError("need at least one eps value")
    distances: list[float] = []
    measures: list[OccupationMeasure] = []
    for eps in eps_arr:
        m = occupation_measure_2d(
            h.h1.samples, h.h2.samples, g, float(eps), config
        )
        measures.append(m)
        distances.append(l1_to_uniform_2d(m))
    passed = all(d <= tolerance for d in distances)
    if strict and not passed:
        raise ValidationError(
            f"occupation measure strayed from uniform: distances {distances} "
            f"exceed tolerance {tolerance}"
        )
    return ZeroNoiseReport2D(
        eps_values=eps_arr,
        l1_distances=distances,
        tolerance=tolerance,
        passed=passed,
        measures=measures,
    )
