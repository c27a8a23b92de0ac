"""Two-outcome single-step propagator, its unitarity constraints and spectra.

The propagator matrix is indexed (-, +) and reads, with p+ = p, p- = 1 - p:

    U[-][-] = G_mm * p-           * exp(-i tau V- / hbar)
    U[-][+] = G_mp * sqrt(p- p+)  * exp((tau/hbar) (-delta + i mu))
    U[+][-] = G_pm * sqrt(p+ p-)  * exp((tau/hbar) ( delta + i mu))
    U[+][+] = G_pp * p+           * exp(-i tau V+ / hbar)

Unitarity pins |G_mp| / |G_pm| = exp(2 delta tau / hbar) and
|G_mm| p- = |G_pp| p+, and forces the phase constraint

    (2 tau / hbar) (mu + (V+ + V-)/2)  ==  (Sigma + Lambda)/hbar + pi   (mod 2 pi)

where Lambda = hbar arg(G_pm / G_mp) and Sigma = hbar arg(G_mm / G_pp).
With those phase conventions the constraint above is exactly what the
orthogonality of the rows of U demands.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .groupoid import build_a2
from .lagrangian import qubit_bias, qubit_lagrangian
from .algebra import StateVector
from .histories import single_step_matrix

FEASIBLE_TOL = 1e-10
REFINE_TOL = 1e-8
DEFAULT_STARTS = 32
DEFAULT_LM_ITERATIONS = 40
_REFINE_SEED = 20210905

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PropagatorModel:
    """Parameters of one time step: weights, bias, clock, vertex factors, phases.

    lam and sigma are the relative vertex phases in action units; when not
    supplied they are derived from the vertex factors (zero if degenerate).
    """

    v_plus: float
    v_minus: float
    mu: float
    delta: float
    p_plus: float
    tau: float
    hbar: float
    gamma_mm: complex = 1.0 + 0j
    gamma_mp: complex = 1.0 + 0j
    gamma_pm: complex = 1.0 + 0j
    gamma_pp: complex = 1.0 + 0j
    lam: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.hbar <= 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not 0.0 <= self.p_plus <= 0.5:
            raise ValueError(f"p_plus must lie in [0, 1/2], got {self.p_plus}")
        for name in ("gamma_mm", "gamma_mp", "gamma_pm", "gamma_pp"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.lam is None:
            lam = 0.0
            if self.gamma_pm != 0 and self.gamma_mp != 0:
                lam = self.hbar * cmath.phase(self.gamma_pm / self.gamma_mp)
            object.__setattr__(self, "lam", lam)
        if self.sigma is None:
            sigma = 0.0
            if self.gamma_mm != 0 and self.gamma_pp != 0:
                sigma = self.hbar * cmath.phase(self.gamma_mm / self.gamma_pp)
            object.__setattr__(self, "sigma", sigma)

    @property
    def p_minus(self) -> float:
        return 1.0 - self.p_plus

    @property
    def gammas(self) -> tuple[complex, complex, complex, complex]:
        return (self.gamma_mm, self.gamma_mp, self.gamma_pm, self.gamma_pp)


@dataclass(frozen=True)
class UnitarityReport:
    """Residuals of the eight unitarity equations plus the derived relations.

    residuals holds, in order, the magnitudes of the four entries of
    U U* - 1 (rows --, -+, +-, ++) followed by the four entries of U* U - 1.
    """

    residuals: tuple[float, float, float, float, float, float, float, float]
    max_residual: float
    relation1_gap: float
    relation2_gap: float
    global_phase_gap: float
    frobenius_left: float
    frobenius_right: float


class SignCase(enum.Enum):
    """Sign pattern of the special propagator form [[A, B], [s1*B, s2*A]]."""

    I = (1.0, 1.0)
    II = (-1.0, 1.0)
    III = (1.0, -1.0)
    IV = (-1.0, -1.0)


def qubit_propagator(model: PropagatorModel) -> np.ndarray:
    """2x2 step matrix on the (-, +) basis; vertex factors scale each entry.

    With unit vertex factors this reproduces the one-step path sum bit for
    bit, because the kernel is computed through the same amplitude
    arithmetic.
    """
    g = build_a2()
    ell = qubit_lagrangian(model.v_plus, model.v_minus, model.mu, model.delta)
    bias = qubit_bias(model.p_plus)
    kernel = single_step_matrix(g, ell, bias, model.tau, model.hbar)
    gamma = np.array(
        [[model.gamma_mm, model.gamma_mp], [model.gamma_pm, model.gamma_pp]], dtype=complex
    )
    return gamma * kernel


def _mod_2pi_distance(theta: float) -> float:
    return abs(math.remainder(theta, TWO_PI))


def unitarity_residuals(model: PropagatorModel) -> UnitarityReport:
    """Evaluate all eight unitarity equations and the derived gap quantities."""
    u = qubit_propagator(model)
    eye = np.eye(2)
    left = u @ u.conj().T - eye
    right = u.conj().T @ u - eye
    residuals = (
        abs(left[0, 0]),
        abs(left[0, 1]),
        abs(left[1, 0]),
        abs(left[1, 1]),
        abs(right[0, 0]),
        abs(right[0, 1]),
        abs(right[1, 0]),
        abs(right[1, 1]),
    )
    growth = math.exp(2.0 * model.delta * model.tau / model.hbar)
    if abs(model.gamma_pm) == 0.0:
        relation1_gap = math.inf
    else:
        relation1_gap = abs(abs(model.gamma_mp) / abs(model.gamma_pm) - growth)
    relation2_gap = abs(abs(model.gamma_mm) * model.p_minus - abs(model.gamma_pp) * model.p_plus)
    v_bar = 0.5 * (model.v_plus + model.v_minus)
    theta = (model.mu + v_bar) * 2.0 * model.tau / model.hbar - (
        (model.sigma + model.lam) / model.hbar + math.pi
    )
    return UnitarityReport(
        residuals=tuple(float(r) for r in residuals),
        max_residual=float(max(residuals)),
        relation1_gap=float(relation1_gap),
        relation2_gap=float(relation2_gap),
        global_phase_gap=_mod_2pi_distance(theta),
        frobenius_left=float(np.linalg.norm(left, "fro")),
        frobenius_right=float(np.linalg.norm(right, "fro")),
    )


@dataclass(frozen=True)
class GammaSolution:
    """Outcome of solve_unitary_gammas; model carries the best vertex factors found."""

    feasible: bool
    model: PropagatorModel
    report: UnitarityReport
    min_residual: float


def _structural_targets(
    delta: float, p_plus: float, tau: float, hbar: float, lam: float, sigma: float, gauge: float
) -> tuple[complex, complex, complex]:
    """Pinned values: G_pm target, G_mp target, and the Sigma phase factor."""
    t_pm = complex(gauge, 0.0)
    t_mp = gauge * math.exp(2.0 * delta * tau / hbar) * cmath.exp(-1j * lam / hbar)
    phase_sigma = cmath.exp(1j * sigma / hbar)
    return t_pm, t_mp, phase_sigma


def _batch_residuals(
    x: np.ndarray,
    kernels: np.ndarray,
    t_pm: np.ndarray,
    t_mp: np.ndarray,
    phase_sigma: np.ndarray,
    p_plus: np.ndarray,
) -> np.ndarray:
    """Residual vector (rows of unitarity defects plus structural defects).

    x has shape (B, 8): re/im of G_mm, G_mp, G_pm, G_pp.  kernels has shape
    (B, 4) holding the gamma-free entries k_mm, k_mp, k_pm, k_pp.
    """
    gmm = x[:, 0] + 1j * x[:, 1]
    gmp = x[:, 2] + 1j * x[:, 3]
    gpm = x[:, 4] + 1j * x[:, 5]
    gpp = x[:, 6] + 1j * x[:, 7]
    u00 = gmm * kernels[:, 0]
    u01 = gmp * kernels[:, 1]
    u10 = gpm * kernels[:, 2]
    u11 = gpp * kernels[:, 3]
    a00 = np.abs(u00) ** 2
    a01 = np.abs(u01) ** 2
    a10 = np.abs(u10) ** 2
    a11 = np.abs(u11) ** 2
    p01 = u00 * np.conj(u10) + u01 * np.conj(u11)
    q01 = np.conj(u00) * u01 + np.conj(u10) * u11
    p_minus = 1.0 - p_plus
    s1 = gpm - t_pm
    s2 = gmp - t_mp
    s3 = gmm * p_minus - gpp * p_plus * phase_sigma
    # Pinning Im(G_pp) = 0 matches the closed-form gauge choice; without it a
    # common phase rotation of (G_mm, G_pp) would defeat the global phase
    # constraint and make every point look feasible.
    return np.stack(
        [
            a00 + a01 - 1.0,
            p01.real,
            p01.imag,
            a10 + a11 - 1.0,
            a00 + a10 - 1.0,
            q01.real,
            q01.imag,
            a01 + a11 - 1.0,
            s1.real,
            s1.imag,
            s2.real,
            s2.imag,
            s3.real,
            s3.imag,
            gpp.imag,
        ],
        axis=-1,
    )


def _lm_minimize(
    x0: np.ndarray,
    kernels: np.ndarray,
    t_pm: np.ndarray,
    t_mp: np.ndarray,
    phase_sigma: np.ndarray,
    p_plus: np.ndarray,
    bound: np.ndarray,
    iterations: int,
) -> np.ndarray:
    """Damped least-squares descent, vectorized over the batch dimension.

    A fixed iteration budget with per-row damping keeps the run deterministic.
    """
    x = x0.copy()
    lam = np.full(x.shape[0], 1e-3)
    eye = np.eye(8)

    def cost_of(xs: np.ndarray) -> np.ndarray:
        f = _batch_residuals(xs, kernels, t_pm, t_mp, phase_sigma, p_plus)
        return np.sum(f * f, axis=-1)

    cost = cost_of(x)
    for _ in range(iterations):
        f0 = _batch_residuals(x, kernels, t_pm, t_mp, phase_sigma, p_plus)
        jac = np.empty((x.shape[0], f0.shape[1], 8))
        for k in range(8):
            h = 1e-7 * (1.0 + np.abs(x[:, k]))
            xp = x.copy()
            xp[:, k] += h
            fk = _batch_residuals(xp, kernels, t_pm, t_mp, phase_sigma, p_plus)
            jac[:, :, k] = (fk - f0) / h[:, None]
        grad = np.einsum("bik,bi->bk", jac, f0)
        hess = np.einsum("bik,bil->bkl", jac, jac)
        a = hess + lam[:, None, None] * eye
        try:
            step = np.linalg.solve(a, -grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            a = a + 1e-8 * eye
            step = np.linalg.solve(a, -grad[..., None])[..., 0]
        x_new = np.clip(x + step, -bound[:, None], bound[:, None])
        cost_new = cost_of(x_new)
        accept = cost_new < cost
        x[accept] = x_new[accept]
        cost[accept] = cost_new[accept]
        lam = np.where(accept, lam * 0.3, lam * 5.0)
        lam = np.clip(lam, 1e-14, 1e10)
    return x


def _refine_batch(
    v_plus: float,
    v_minus: float,
    mus: np.ndarray,
    delta: float,
    p_plus: float,
    tau: float,
    hbar: float,
    lam_phase: float,
    sigma_phase: float,
    gauge: float,
    n_starts: int,
    iterations: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Best vertex factors and joint residual per mu value, via multi-start descent.

    Returns (gammas, residual) with gammas of shape (len(mus), 4) complex and
    residual the max magnitude over the eight unitarity equations and the
    four structural constraints at the best point found.
    """
    mus = np.asarray(mus, dtype=float)
    n_points = mus.shape[0]
    p_minus = 1.0 - p_plus
    root = math.sqrt(p_plus * p_minus)
    k_mm = p_minus * np.exp(-1j * tau * v_minus / hbar) * np.ones(n_points, dtype=complex)
    k_mp = root * np.exp((tau / hbar) * (-delta + 1j * mus))
    k_pm = root * np.exp((tau / hbar) * (delta + 1j * mus))
    k_pp = p_plus * np.exp(-1j * tau * v_plus / hbar) * np.ones(n_points, dtype=complex)
    kernels = np.stack([k_mm, k_mp, k_pm, k_pp], axis=-1)
    t_pm, t_mp, phase_sigma = _structural_targets(delta, p_plus, tau, hbar, lam_phase, sigma_phase, gauge)

    bound_val = 4.0 * max(1.0, abs(t_pm), abs(t_mp), 1.0 / p_plus, 1.0 / p_minus)
    rng = np.random.default_rng(seed)
    # One structure-respecting start plus random ones, shared across points.
    s = 1.0 - gauge * gauge * p_plus * p_minus * math.exp(2.0 * delta * tau / hbar)
    g_pp0 = math.sqrt(max(s, 1e-2)) / p_plus
    g_mm0 = g_pp0 * (p_plus / p_minus) * phase_sigma
    base = np.array(
        [g_mm0.real, g_mm0.imag, t_mp.real, t_mp.imag, t_pm.real, t_pm.imag, g_pp0, 0.0]
    )
    starts = np.empty((n_starts, 8))
    starts[0] = base
    if n_starts > 1:
        starts[1:] = rng.uniform(-bound_val / 3.0, bound_val / 3.0, size=(n_starts - 1, 8))

    big = n_points * n_starts
    x0 = np.tile(starts, (n_points, 1))
    rep = lambda arr: np.repeat(arr, n_starts, axis=0)
    kernels_b = rep(kernels)
    t_pm_b = np.full(big, t_pm, dtype=complex)
    t_mp_b = np.full(big, t_mp, dtype=complex)
    phase_b = np.full(big, phase_sigma, dtype=complex)
    p_plus_b = np.full(big, p_plus)
    bound_b = np.full(big, bound_val)

    x = _lm_minimize(x0, kernels_b, t_pm_b, t_mp_b, phase_b, p_plus_b, bound_b, iterations)
    f = _batch_residuals(x, kernels_b, t_pm_b, t_mp_b, phase_b, p_plus_b)
    # Joint residual: unitarity magnitudes (off-diagonals pair up re/im) and
    # structural magnitudes.
    mags = np.stack(
        [
            np.abs(f[:, 0]),
            np.hypot(f[:, 1], f[:, 2]),
            np.abs(f[:, 3]),
            np.abs(f[:, 4]),
            np.hypot(f[:, 5], f[:, 6]),
            np.abs(f[:, 7]),
            np.hypot(f[:, 8], f[:, 9]),
            np.hypot(f[:, 10], f[:, 11]),
            np.hypot(f[:, 12], f[:, 13]),
            np.abs(f[:, 14]),
        ],
        axis=-1,
    )
    joint = np.max(mags, axis=-1).reshape(n_points, n_starts)
    best = np.argmin(joint, axis=1)
    rows = x.reshape(n_points, n_starts, 8)[np.arange(n_points), best]
    gammas = rows[:, 0::2] + 1j * rows[:, 1::2]
    return gammas, joint[np.arange(n_points), best]


def solve_unitary_gammas(
    v_plus: float,
    v_minus: float,
    mu: float,
    delta: float,
    p_plus: float,
    tau: float,
    hbar: float,
    lam: float = 0.0,
    sigma: float = 0.0,
    gauge: float = 1.0,
    feasible_tol: float = FEASIBLE_TOL,
    n_starts: int = DEFAULT_STARTS,
    lm_iterations: int = DEFAULT_LM_ITERATIONS,
    seed: int = _REFINE_SEED,
) -> GammaSolution:
    """Vertex factors making the step unitary, with the phases lam/sigma pinned.

    The gauge fixes G_pm = gauge (real, positive); G_mp then carries the
    delta growth factor and the lam phase, |G_pp| comes from the row-+
    normalization and G_mm follows from the sigma relation.  Infeasibility
    (negative |G_pp|^2, or the global phase constraint violated) is certified
    by a bounded multi-start least-squares search over all eight real vertex
    degrees of freedom, whose best joint residual is reported.
    """
    if not 0.0 < p_plus <= 0.5:
        raise ValueError(f"solving requires p_plus in (0, 1/2], got {p_plus}")
    if gauge <= 0:
        raise ValueError(f"gauge must be positive, got {gauge}")
    if tau <= 0 or hbar <= 0:
        raise ValueError("tau and hbar must be positive")
    p_minus = 1.0 - p_plus
    t_pm, t_mp, phase_sigma = _structural_targets(delta, p_plus, tau, hbar, lam, sigma, gauge)
    s = 1.0 - gauge * gauge * p_plus * p_minus * math.exp(2.0 * delta * tau / hbar)
    closed: PropagatorModel | None = None
    if s >= 0.0:
        g_pp = math.sqrt(s) / p_plus
        g_mm = g_pp * (p_plus / p_minus) * phase_sigma
        closed = PropagatorModel(
            v_plus=v_plus,
            v_minus=v_minus,
            mu=mu,
            delta=delta,
            p_plus=p_plus,
            tau=tau,
            hbar=hbar,
            gamma_mm=g_mm,
            gamma_mp=t_mp,
            gamma_pm=t_pm,
            gamma_pp=complex(g_pp, 0.0),
            lam=lam,
            sigma=sigma,
        )
        report = unitarity_residuals(closed)
        if report.max_residual <= feasible_tol:
            return GammaSolution(True, closed, report, report.max_residual)
    gammas, resid = _refine_batch(
        v_plus, v_minus, np.array([mu]), delta, p_plus, tau, hbar,
        lam, sigma, gauge, n_starts, lm_iterations, seed,
    )
    model = PropagatorModel(
        v_plus=v_plus,
        v_minus=v_minus,
        mu=mu,
        delta=delta,
        p_plus=p_plus,
        tau=tau,
        hbar=hbar,
        gamma_mm=complex(gammas[0, 0]),
        gamma_mp=complex(gammas[0, 1]),
        gamma_pm=complex(gammas[0, 2]),
        gamma_pp=complex(gammas[0, 3]),
        lam=lam,
        sigma=sigma,
    )
    return GammaSolution(False, model, unitarity_residuals(model), float(resid[0]))


@dataclass(frozen=True)
class ScanPoint:
    mu: float
    mu_tau_over_hbar: float
    feasible: bool
    min_residual: float
    model: PropagatorModel


def quantization_scan(
    v_plus: float,
    v_minus: float,
    delta: float,
    p_plus: float,
    tau: float,
    hbar: float,
    lam: float,
    sigma: float,
    gauge: float,
    grid: np.ndarray,
    feasible_tol: float = FEASIBLE_TOL,
    n_starts: int = DEFAULT_STARTS,
    lm_iterations: int = DEFAULT_LM_ITERATIONS,
    seed: int = _REFINE_SEED,
) -> list[ScanPoint]:
    """Solve for unitary vertex factors along a grid of mu*tau/hbar values.

    Feasible grid points come out of the closed form; the rest are refined in
    one shared batch so the scan stays fast and deterministic.
    """
    grid = np.asarray(grid, dtype=float)
    points: list[ScanPoint | None] = [None] * grid.shape[0]
    pending: list[int] = []
    for i, x in enumerate(grid):
        mu = x * hbar / tau
        solution = _closed_form_only(v_plus, v_minus, mu, delta, p_plus, tau, hbar, lam, sigma, gauge, feasible_tol)
        if solution is not None:
            points[i] = ScanPoint(mu, float(x), True, solution.min_residual, solution.model)
        else:
            pending.append(i)
    if pending:
        mus = np.array([grid[i] * hbar / tau for i in pending])
        gammas, resid = _refine_batch(
            v_plus, v_minus, mus, delta, p_plus, tau, hbar,
            lam, sigma, gauge, n_starts, lm_iterations, seed,
        )
        for j, i in enumerate(pending):
            model = PropagatorModel(
                v_plus=v_plus,
                v_minus=v_minus,
                mu=float(mus[j]),
                delta=delta,
                p_plus=p_plus,
                tau=tau,
                hbar=hbar,
                gamma_mm=complex(gammas[j, 0]),
                gamma_mp=complex(gammas[j, 1]),
                gamma_pm=complex(gammas[j, 2]),
                gamma_pp=complex(gammas[j, 3]),
                lam=lam,
                sigma=sigma,
            )
            points[i] = ScanPoint(float(mus[j]), float(grid[i]), False, float(resid[j]), model)
    return [p for p in points if p is not None]


def _closed_form_only(
    v_plus, v_minus, mu, delta, p_plus, tau, hbar, lam, sigma, gauge, feasible_tol
) -> GammaSolution | None:
    """Closed-form construction; None when it does not meet the tolerance."""
    if not 0.0 < p_plus <= 0.5:
        raise ValueError(f"solving requires p_plus in (0, 1/2], got {p_plus}")
    if gauge <= 0:
        raise ValueError(f"gauge must be positive, got {gauge}")
    p_minus = 1.0 - p_plus
    t_pm, t_mp, phase_sigma = _structural_targets(delta, p_plus, tau, hbar, lam, sigma, gauge)
    s = 1.0 - gauge * gauge * p_plus * p_minus * math.exp(2.0 * delta * tau / hbar)
    if s < 0.0:
        return None
    g_pp = math.sqrt(s) / p_plus
    g_mm = g_pp * (p_plus / p_minus) * phase_sigma
    model = PropagatorModel(
        v_plus=v_plus, v_minus=v_minus, mu=mu, delta=delta, p_plus=p_plus,
        tau=tau, hbar=hbar,
        gamma_mm=g_mm, gamma_mp=t_mp, gamma_pm=t_pm, gamma_pp=complex(g_pp, 0.0),
        lam=lam, sigma=sigma,
    )
    report = unitarity_residuals(model)
    if report.max_residual <= feasible_tol:
        return GammaSolution(True, model, report, report.max_residual)
    return None


def sign_case_matrix(a: complex, b: complex, case: SignCase) -> np.ndarray:
    """The matrix [[A, B], [s1*B, s2*A]] for the given sign pattern."""
    s1, s2 = case.value
    return np.array([[a, b], [s1 * b, s2 * a]], dtype=complex)


def special_case_spectrum(a: complex, b: complex, case: SignCase) -> tuple[complex, complex]:
    """Closed-form eigenvalue pair of sign_case_matrix(a, b, case)."""
    if case is SignCase.I:
        return (a + b, a - b)
    if case is SignCase.II:
        return (a + 1j * b, a - 1j * b)
    if case is SignCase.III:
        r = cmath.sqrt(a * a + b * b)
        return (r, -r)
    r = cmath.sqrt(a * a - b * b)
    return (r, -r)


def uniform_free_matrix(gamma: complex, gamma_prime: complex, mu: float, tau: float, hbar: float) -> np.ndarray:
    """Unbiased step with no potentials: (1/2) [[G, G' e], [G' e, G]], e = exp(i mu tau / hbar)."""
    e = cmath.exp(1j * mu * tau / hbar)
    return 0.5 * np.array([[gamma, gamma_prime * e], [gamma_prime * e, gamma]], dtype=complex)


def uniform_free_spectrum(
    gamma: complex, gamma_prime: complex, mu: float, tau: float, hbar: float
) -> tuple[complex, complex]:
    """Eigenvalues (1/2)(G ± G' exp(i mu tau / hbar)) of the unbiased free step."""
    e = cmath.exp(1j * mu * tau / hbar)
    return (0.5 * (gamma + gamma_prime * e), 0.5 * (gamma - gamma_prime * e))


def power_propagator(u: np.ndarray, n: int) -> np.ndarray:
    """U^n by repeated squaring; n = 0 gives the identity."""
    if not (isinstance(n, int) and n >= 0):
        raise ValueError(f"power must be a non-negative integer, got {n!r}")
    return np.linalg.matrix_power(np.asarray(u, dtype=complex), n)


def evolve_state(u: np.ndarray, state: StateVector, n: int) -> StateVector:
    """Apply n propagation steps to a pure state."""
    psi = state.as_array()
    if float(np.linalg.norm(psi)) == 0.0:
        raise ValueError("state must have nonzero norm")
    moved = power_propagator(u, n) @ psi
    return StateVector(tuple(moved))
