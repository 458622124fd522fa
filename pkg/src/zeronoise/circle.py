"""Stationary diffusion-perturbed densities on the circle, two independent ways.

The stationary forward equation for a drift h and diffusion coefficient
Gamma at noise level eps,

    (eps/2) (Gamma rho)'' - (h rho)' = 0,    integral rho = 1,

is solved by

* an integrating-factor quadrature scheme (the high-accuracy oracle), and
* a cyclic second-order finite-difference discretization (the generic
  solver, cross-validated against the oracle and extensible to 2-D).

Both return the same first integral: (eps/2)(Gamma rho)' - h rho = K with a
constant ``flux_constant`` K (minus the probability flux). The residual
r_eps = rho_eps - rho_0 against the zero-noise density rho_0 = c/h is then
measured and certified against the explicit first-order bounds

    ||r_eps||_2  <= (eps/alpha) ||(Gamma rho_0)'||_2,
    ||r'_eps||_2 <= eps (2 beta/alpha^2 ||(Gamma rho_0)'||_2
                           + (1/alpha) ||(Gamma rho_0)''||_2),

valid below the thresholds 2 alpha / max Gamma' and 2 alpha / (3 max Gamma')
respectively (no restriction when Gamma is constant), where alpha = min h
and beta = max(|h'| + (alpha / (3 max Gamma')) |Gamma''|) (beta = max h'
for constant Gamma).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    InsufficientDataError,
    PrecisionExhaustedError,
    SolverFailureError,
    ValidationError,
)
from .fields import (
    DiffusionCoeff1D,
    FlowField1D,
    Grid1D,
    PeriodicField1D,
    deriv_samples,
    norm_l2,
    norm_sup,
)
from .orderfit import OrderFit, fit_order

# quadrature of exp(-theta) over a cell loses accuracy once theta swings more
# than a few e-foldings inside one cell; 6 keeps the cell error below ~1e-9
CELL_EFOLD_CAP = 6.0

FLUX_RELSTD_QUADRATURE = 1e-8
DENSITY_MASS_TOL = 1e-10
ZERO_MEAN_TOL = 1e-10
NEGATIVE_CLAMP_TOL = 1e-8

# Poincare-Wirtinger constant on the unit circle for mean-zero functions
POINCARE_KAPPA = 1.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class Density:
    """A strictly positive probability density on the circle grid."""

    field: PeriodicField1D

    def __post_init__(self):
        s = self.field.samples
        if not np.all(s > 0):
            raise ValidationError("density samples must be strictly positive")
        mass = float(np.mean(s))
        if abs(mass - 1.0) > DENSITY_MASS_TOL:
            raise ValidationError(f"density mass {mass!r} deviates from 1 beyond 1e-10")

    @property
    def samples(self) -> np.ndarray:
        return self.field.samples

    @property
    def grid(self) -> Grid1D:
        return self.field.grid


@dataclass(frozen=True)
class StationarySolution:
    """Stationary density plus the constant of its first integral.

    ``flux_constant`` is K in (eps/2)(Gamma rho)' - h rho = K; the
    probability flux h rho - (eps/2)(Gamma rho)' equals -K and is constant
    across the grid (relative scatter bounded per solver below).
    """

    density: Density
    epsilon: float
    flux_constant: float
    solver_tag: str  # "quadrature" | "finite_difference"
    flux_rel_std: float
    clamped: bool = False

    def __post_init__(self):
        n = self.density.grid.n
        tol = FLUX_RELSTD_QUADRATURE if self.solver_tag == "quadrature" else 10.0 / n**2
        if self.flux_rel_std > tol:
            raise SolverFailureError(
                f"{self.solver_tag} solution violates flux constancy: "
                f"relative stdev {self.flux_rel_std:.3e} > {tol:.3e}"
            )


@dataclass(frozen=True)
class ResidualReport:
    """Norms of r_eps = rho_eps - rho_0 (mean-zero by construction)."""

    epsilon: float
    residual: PeriodicField1D
    l2: float
    deriv_l2: float
    sup: float
    zero_mean_defect: float

    def __post_init__(self):
        if self.zero_mean_defect > ZERO_MEAN_TOL:
            raise ValidationError(
                f"residual mean {self.zero_mean_defect:.3e} exceeds 1e-10; "
                "both densities should integrate to 1"
            )


@dataclass(frozen=True)
class BoundCertificate:
    """Explicit first-order bounds evaluated on one (eps, problem) pair.

    Verdicts are None when eps sits above the corresponding threshold: the
    bound is silent there, which is not a failure.
    """

    epsilon: float
    alpha: float
    beta: float
    norm_gp1: float
    norm_gp2: float
    eps_threshold_l2: float
    eps_threshold_h1: float
    l2_bound: float
    h1_bound: float
    l2_ok: bool | None
    h1_ok: bool | None

    def __post_init__(self):
        if not (self.eps_threshold_l2 > 0 and self.eps_threshold_h1 > 0):
            raise ValidationError("bound thresholds must be positive")
        if self.l2_bound < 0 or self.h1_bound < 0:
            raise ValidationError("bounds must be nonnegative")


@dataclass(frozen=True)
class ConvergenceReport:
    """Residual metrics over a decreasing eps family with fitted orders."""

    eps_values: np.ndarray
    reports: list[ResidualReport]
    certificates: list[BoundCertificate]
    fits: dict[str, OrderFit | None]  # keys: l2, deriv_l2, sup; None when exact
    poincare_ok: list[bool]
    exact: bool

    def metric(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports])


def slack(bound: float) -> float:
    """Discretization allowance added to a continuum bound."""
    return 1e-8 + 1e-6 * bound


def unperturbed_density(h: FlowField1D) -> Density:
    """Zero-noise stationary density rho_0 = c/h with c = 1/integral(1/h)."""
    inv = 1.0 / h.field.samples
    c = 1.0 / float(np.mean(inv))
    return Density(PeriodicField1D(h.grid, c * inv))


# ---------------------------------------------------------------------------
# quadrature solver


def _drift_samples(h: FlowField1D | PeriodicField1D) -> tuple[np.ndarray, Grid1D]:
    if isinstance(h, FlowField1D):
        return h.field.samples, h.grid
    return h.samples, h.grid


def _flux_statistics(
    rho: np.ndarray, h: np.ndarray, gam: np.ndarray, eps: float
) -> tuple[float, float]:
    """Mean and relative stdev of the pointwise flux h rho - (eps/2)(Gamma rho)'.

    Detailed-balance solutions have flux ~ 0, so the stdev is normalized by
    the sup scale of the flux ingredients (backward-error style), not by the
    mean. The derivative term is itself floored by sup|Gamma rho|, since for
    exactly constant Gamma rho (pure diffusion) the realized derivative is
    pure roundoff and no usable scale remains.
    """
    deriv = deriv_samples(gam * rho)
    flux = h * rho - 0.5 * eps * deriv
    mean = float(np.mean(flux))
    diff_scale = max(float(np.max(np.abs(deriv))), float(np.max(np.abs(gam * rho))))
    scale = float(np.max(np.abs(h * rho))) + 0.5 * eps * diff_scale
    denom = max(abs(mean), scale, np.finfo(float).tiny)
    return mean, float(np.std(flux) / denom)


def _face_flux_statistics(
    rho: np.ndarray, h: np.ndarray, gam: np.ndarray, eps: float
) -> tuple[float, float]:
    """Flux statistics for the 3-point scheme, on cell faces.

    Every solved row makes consecutive face fluxes

        F_i = ((h rho)_i + (h rho)_{i+1})/2 - (eps/2) (G_{i+1} - G_i)/dx

    (G = Gamma rho) telescope exactly, so non-constancy here measures the
    replaced-row residual and any clamping perturbation instead of how well
    the grid resolves the solution. A spectral derivative would rate sharply
    peaked but perfectly valid solutions as non-conservative.
    """
    n = rho.size
    hr = h * rho
    G = gam * rho
    face_adv = 0.5 * (hr + np.roll(hr, -1))
    face_diff = (np.roll(G, -1) - G) * n
    flux = face_adv - 0.5 * eps * face_diff
    mean = float(np.mean(flux))
    diff_scale = max(float(np.max(np.abs(face_diff))), float(np.max(np.abs(G))))
    scale = float(np.max(np.abs(face_adv))) + 0.5 * eps * diff_scale
    denom = max(abs(mean), scale, np.finfo(float).tiny)
    return mean, float(np.std(flux) / denom)


def solve_stationary_quadrature(
    h: FlowField1D | PeriodicField1D,
    gamma: DiffusionCoeff1D,
    eps: float,
) -> StationarySolution:
    """Integrating-factor solution of the stationary equation (the oracle).

    With u = Gamma rho and b = 2h/(eps Gamma), the first integral
    (eps/2) u' - (h/Gamma) u = K becomes u' - b u = 2K/eps, whose periodic
    solution is proportional to

        w(x) = integral over [x, x+1] of exp(B(x) - B(s)) ds,

    where B is the (non-periodic) antiderivative of b extended by
    B(s+1) = B(s) + B(1). One checks w' - b w = e^{-B(1)} - 1, so the
    periodicity constraint is built into the representation and the flux
    constant comes out in closed form instead of being solved for. For
    positive drifts B is increasing and every exponent is <= 0, which is the
    log-domain running-maximum rescaling in its sharpest form; signed drifts
    (a documented test path used by the gradient-flow cross-checks; they
    bypass the nonsingularity gate) are handled by per-point log-sum-exp,
    including the zero-circulation case B(1) = 0 where the formula
    degenerates to the detailed-balance density with zero flux.

    Cells are integrated with 8-point Gauss-Legendre on spectrally evaluated
    increments of B; accuracy collapses once a single cell spans more than a
    few e-foldings of the integrand, so eps below 2 max|h/Gamma| /
    (CELL_EFOLD_CAP * n) raises a precision-exhausted error naming the
    smallest safe eps for this grid.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    h_samples, grid = _drift_samples(h)
    if gamma.grid.n != grid.n:
        raise ValidationError("drift and diffusion live on different grids")
    n = grid.n
    gam = gamma.gamma_sq.samples
    b = 2.0 * h_samples / (eps * gam)

    cell_efold = float(np.max(np.abs(b)) / n)
    if cell_efold > CELL_EFOLD_CAP:
        eps_min = 2.0 * float(np.max(np.abs(h_samples / gam))) / (CELL_EFOLD_CAP * n)
        raise PrecisionExhaustedError(
            f"eps={eps} is below what n={n} resolves: a grid cell spans "
            f"{cell_efold:.2f} e-foldings of the integrating factor "
            f"(cap {CELL_EFOLD_CAP}); smallest safe eps here is {eps_min:.6g}, "
            "or refine the grid",
            eps_min=eps_min,
        )

    # spectral antiderivative pieces of b: B(s) = mean_b*s + G(s), G periodic
    bh = np.fft.rfft(b)
    mean_b = bh[0].real / n
    k = 2j * np.pi * np.arange(n // 2 + 1)
    gh = np.zeros_like(bh)
    gh[1:-1] = bh[1:-1] / k[1:-1]
    G = np.fft.irfft(gh, n)
    dx = 1.0 / n

    # Gauss-Legendre nodes of every cell at once: each node offset is a
    # uniform shift of the base grid, so one FFT per node evaluates G there
    offsets = (_GL_NODES + 1.0) / 2.0
    theta = np.empty((n, offsets.size))
    for q, o in enumerate(offsets):
        Gq = np.fft.irfft(gh * np.exp(k * (o * dx)), n)
        theta[:, q] = mean_b * o * dx + Gq - G
    cell_integrals = 0.5 * dx * (np.exp(-theta) @ _GL_WEIGHTS)

    # exact per-cell increments of B and its lifted values at grid points
    dB = mean_b * dx + np.roll(G, -1) - G
    circulation = mean_b  # B(1)
    B_grid = np.concatenate([[0.0], np.cumsum(dB)])[:n]
    B_ext = np.concatenate([B_grid, B_grid + circulation])
    logJ_ext = np.log(np.concatenate([cell_integrals, cell_integrals]))

    window = np.arange(n)[:, None] + np.arange(n)[None, :]
    exponents = B_grid[:, None] - B_ext[window] + logJ_ext[window]
    row_max = exponents.max(axis=1)
    log_w = row_max + np.log(np.sum(np.exp(exponents - row_max[:, None]), axis=1))

    log_rho = log_w - np.log(gam)
    shift = log_rho.max()
    rho_un = np.exp(log_rho - shift)
    Z = float(np.mean(rho_un))
    rho = rho_un / Z

    if isinstance(h, FlowField1D):
        # positive drift makes the circulation strictly positive
        assert circulation > 0.0, "positive drift must have positive circulation"

    # w' - b w = expm1(-B(1)); the normalized u = Gamma rho rescales it
    kappa_w = float(np.expm1(-circulation))
    flux_constant = 0.5 * eps * kappa_w * float(np.exp(-shift)) / Z

    _, rel_std = _flux_statistics(rho, h_samples, gam, eps)
    return StationarySolution(
        density=Density(PeriodicField1D(grid, rho)),
        epsilon=float(eps),
        flux_constant=flux_constant,
        solver_tag="quadrature",
        flux_rel_std=rel_std,
    )


# ---------------------------------------------------------------------------
# finite-difference solver


def _fd_operator(h: np.ndarray, gam: np.ndarray, eps: float, n: int) -> sp.csr_matrix:
    """Cyclic band matrix of rho -> (eps/2) D2(Gamma rho) - D1(h rho)."""
    dx = 1.0 / n
    ones = np.ones(n)
    D1 = sp.diags([ones, -ones], [1, -1], shape=(n, n), format="lil")
    D1[0, n - 1] = -1.0
    D1[n - 1, 0] = 1.0
    D1 = D1.tocsr() * (1.0 / (2.0 * dx))
    D2 = sp.diags([ones, -2.0 * ones, ones], [1, 0, -1], shape=(n, n), format="lil")
    D2[0, n - 1] = 1.0
    D2[n - 1, 0] = 1.0
    D2 = D2.tocsr() * (1.0 / dx**2)
    return (0.5 * eps) * (D2 @ sp.diags(gam)) - D1 @ sp.diags(h)


def _condition_estimate(A: sp.csr_matrix) -> float | None:
    try:
        lu = spla.splu(A.tocsc())
        ainv = spla.LinearOperator(A.shape, matvec=lu.solve)
        return float(spla.onenormest(A) * spla.onenormest(ainv))
    except Exception:
        return None


def solve_stationary_fd(
    h: FlowField1D | PeriodicField1D,
    gamma: DiffusionCoeff1D,
    eps: float,
    n: int | None = None,
) -> StationarySolution:
    """Second-order central-difference solution on a cyclic grid.

    One row of the singular stationary system is replaced by the
    normalization sum(rho)/n = 1; the replaced equation's residual is checked
    afterwards (the operator's columns sum to zero, so it must be satisfied
    up to roundoff). Accepts raw signed drifts like the quadrature solver.
    Small negative samples (>= -1e-8) are clamped and renormalized with a
    recorded flag; worse negativity is a solver failure.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    h_samples, grid = _drift_samples(h)
    if gamma.grid.n != grid.n:
        raise ValidationError("drift and diffusion live on different grids")
    n = grid.n if n is None else int(n)
    if n != grid.n:
        raise ValidationError(f"requested n={n} but fields are sampled on n={grid.n}")
    if n < 64:
        raise ValidationError(f"finite-difference solver needs n >= 64, got {n}")
    gam = gamma.gamma_sq.samples

    A = _fd_operator(h_samples, gam, eps, n)
    M = A.tolil()
    M[0, :] = 1.0 / n
    M = M.tocsc()
    rhs = np.zeros(n)
    rhs[0] = 1.0
    try:
        rho = spla.splu(M).solve(rhs)
    except RuntimeError as exc:
        raise SolverFailureError(
            f"finite-difference system is singular: {exc}",
            condition_estimate=_condition_estimate(M.tocsr()),
        ) from exc
    if not np.all(np.isfinite(rho)):
        raise SolverFailureError(
            "finite-difference solve produced non-finite values",
            condition_estimate=_condition_estimate(M.tocsr()),
        )

    replaced_residual = float(abs((A @ rho)[0]))
    if replaced_residual > 1e-8:
        raise SolverFailureError(
            f"replaced normalization row has residual {replaced_residual:.3e} > 1e-8",
            condition_estimate=_condition_estimate(M.tocsr()),
        )

    clamped = False
    lo = float(rho.min())
    if lo <= 0:
        if lo < -NEGATIVE_CLAMP_TOL:
            raise SolverFailureError(
                f"density has negative samples down to {lo:.3e}, "
                f"beyond the -{NEGATIVE_CLAMP_TOL} clamp tolerance",
                condition_estimate=_condition_estimate(M.tocsr()),
            )
        rho = np.clip(rho, np.finfo(float).tiny, None)
        rho = rho / np.mean(rho)
        clamped = True

    flux_mean, rel_std = _face_flux_statistics(rho, h_samples, gam, eps)
    return StationarySolution(
        density=Density(PeriodicField1D(grid, rho)),
        epsilon=float(eps),
        flux_constant=-flux_mean,
        solver_tag="finite_difference",
        flux_rel_std=rel_std,
        clamped=clamped,
    )


# ---------------------------------------------------------------------------
# residuals, certificates, convergence


def residual(solution: StationarySolution, rho0: Density) -> ResidualReport:
    """r_eps = rho_eps - rho_0 with its norms; grids must coincide."""
    if solution.density.grid.n != rho0.grid.n:
        raise ValidationError("solution and reference density grids differ")
    r = solution.density.samples - rho0.samples
    rf = PeriodicField1D(solution.density.grid, r)
    return ResidualReport(
        epsilon=solution.epsilon,
        residual=rf,
        l2=norm_l2(rf),
        deriv_l2=norm_l2(PeriodicField1D(rf.grid, deriv_samples(r))),
        sup=norm_sup(rf),
        zero_mean_defect=float(abs(np.mean(r))),
    )


GAMMA_CONST_TOL = 1e-10


def certify_bounds(
    h: FlowField1D,
    gamma: DiffusionCoeff1D,
    report: ResidualReport,
) -> BoundCertificate:
    """Evaluate the explicit residual bounds for one eps.

    All extrema (alpha, beta, max Gamma') are grid-sample surrogates,
    second-order accurate; the ``slack`` allowance absorbs that and the
    solver discretization error. Verdicts are issued only below the
    matching threshold.
    """
    eps = report.epsilon
    hs = h.field.samples
    gam = gamma.gamma_sq.samples
    alpha = h.alpha
    hp = deriv_samples(hs)
    gp = deriv_samples(gam)
    gpp = deriv_samples(gam, order=2)

    gamma_is_const = float(np.max(np.abs(gp))) <= GAMMA_CONST_TOL * max(
        1.0, float(np.max(np.abs(gam)))
    )
    if gamma_is_const:
        beta = float(np.max(hp))
        thr_l2 = np.inf
        thr_h1 = np.inf
    else:
        max_gp = float(np.max(gp))
        beta = float(np.max(np.abs(hp) + (alpha / (3.0 * max_gp)) * np.abs(gpp)))
        thr_l2 = 2.0 * alpha / max_gp
        thr_h1 = 2.0 * alpha / (3.0 * max_gp)

    rho0 = unperturbed_density(h)
    grho0 = gam * rho0.samples
    gp1 = norm_l2(PeriodicField1D(h.grid, deriv_samples(grho0)))
    gp2 = norm_l2(PeriodicField1D(h.grid, deriv_samples(grho0, order=2)))

    l2_bound = (eps / alpha) * gp1
    h1_bound = eps * (2.0 * beta / alpha**2 * gp1 + gp2 / alpha)
    l2_ok = bool(report.l2 <= l2_bound + slack(l2_bound)) if eps < thr_l2 else None
    h1_ok = bool(report.deriv_l2 <= h1_bound + slack(h1_bound)) if eps < thr_h1 else None

    return BoundCertificate(
        epsilon=eps,
        alpha=alpha,
        beta=beta,
        norm_gp1=gp1,
        norm_gp2=gp2,
        eps_threshold_l2=thr_l2,
        eps_threshold_h1=thr_h1,
        l2_bound=l2_bound,
        h1_bound=h1_bound,
        l2_ok=l2_ok,
        h1_ok=h1_ok,
    )


EXACT_METRIC_FLOOR = 1e-13


def convergence_study(
    h: FlowField1D,
    gamma: DiffusionCoeff1D,
    eps_values: Sequence[float],
) -> ConvergenceReport:
    """Sweep a strictly decreasing eps family and fit log-log slopes.

    Solves with the quadrature oracle at each eps, certifies the explicit
    bounds, fits orders for the L2, derivative-L2 and sup residual norms,
    and records the mean-zero Poincare-Wirtinger domination
    sup <= kappa * ||r'||_2 (kappa = 1) at each eps. Families whose
    residuals vanish identically (constant drift) are flagged ``exact``
    with no slopes fitted.
    """
    eps_arr = np.asarray(list(eps_values), dtype=float)
    if eps_arr.size < 3:
        raise InsufficientDataError(
            f"convergence study needs at least 3 eps values, got {eps_arr.size}"
        )
    if not np.all(np.diff(eps_arr) < 0):
        raise ValidationError("eps_values must be strictly decreasing")

    rho0 = unperturbed_density(h)
    reports: list[ResidualReport] = []
    certificates: list[BoundCertificate] = []
    for eps in eps_arr:
        sol = solve_stationary_quadrature(h, gamma, float(eps))
        rep = residual(sol, rho0)
        cert = certify_bounds(h, gamma, rep)
        if eps >= cert.eps_threshold_l2:
            raise ValidationError(
                f"eps={eps} is not below the bound threshold "
                f"{cert.eps_threshold_l2:.6g}; restrict the family"
            )
        reports.append(rep)
        certificates.append(cert)

    metrics = {name: np.array([getattr(r, name) for r in reports])
               for name in ("l2", "deriv_l2", "sup")}
    exact = all(np.all(m <= EXACT_METRIC_FLOOR) for m in metrics.values())
    fits: dict[str, OrderFit | None] = {}
    for name, values in metrics.items():
        fits[name] = None if exact else fit_order(list(zip(eps_arr, values)))

    poincare_ok = [bool(r.sup <= POINCARE_KAPPA * r.deriv_l2 + 1e-14) for r in reports]
    return ConvergenceReport(
        eps_values=eps_arr,
        reports=reports,
        certificates=certificates,
        fits=fits,
        poincare_ok=poincare_ok,
        exact=exact,
    )
