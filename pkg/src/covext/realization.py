"""State-space cross-validation layer.

Companion-form realizations of the positive-real function and its
minimum-phase spectral factor, the classical discrete algebraic Riccati
equation as an independent oracle, and the equivalence check between its
minimal solution and the minimal solution of the companion-form
(zero-dynamics) Riccati equation with frozen g.  Used to validate the
main solver against standard stochastic realization theory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cee import CEEProblem, SolveOptions, _newton_ramped, companion
from .errors import DataError, InvalidBranchError, SolverError, VerificationError


@dataclass(frozen=True, eq=False)
class CompanionRealization:
    """f(z) = 1/2 + h'(zI - F)^{-1} g with F = J - a h'."""

    a: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        g = np.asarray(self.g, dtype=float).ravel()
        if a.size != g.size or a.size < 1:
            raise DataError("a and g must be n-vectors, n >= 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def F(self) -> np.ndarray:
        return companion(self.a)

    def __call__(self, z):
        return eval_f_realization(self, z)


@dataclass(frozen=True, eq=False)
class SpectralFactorRealization:
    """w(z) = rho + h'(zI - F)^{-1} k."""

    a: np.ndarray
    k: np.ndarray
    rho: float

    @property
    def F(self) -> np.ndarray:
        return companion(self.a)

    def __call__(self, z):
        zz = np.asarray(z, dtype=complex)
        out = np.empty(zz.shape, dtype=complex)
        F = self.F
        n = self.a.size
        for idx, zval in np.ndenumerate(zz):
            x = np.linalg.solve(zval * np.eye(n) - F, self.k)
            out[idx] = self.rho + x[0]
        return out[()] if out.shape == () else out


def g_from_ab(a, b) -> np.ndarray:
    """Realization vector g = (b - a)/2 from the coefficient vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise DataError("a and b must have equal length")
    return 0.5 * (b - a)


def b_from_ag(a, g) -> np.ndarray:
    """Inverse map: numerator coefficients b = a + 2g."""
    return np.asarray(a, dtype=float).ravel() + 2.0 * np.asarray(g, dtype=float).ravel()


def eval_f_realization(real: CompanionRealization, z) -> complex:
    """Resolvent evaluation 1/2 + h'(zI - F)^{-1} g via a direct solve."""
    F = real.F
    n = real.n
    A = z * np.eye(n) - F
    scale = max(1.0, abs(z), float(np.max(np.abs(real.a))))
    if np.linalg.svd(A, compute_uv=False)[-1] < 1e-13 * scale:
        raise DataError(f"z = {z} is at or near an eigenvalue of F")
    x = np.linalg.solve(A, real.g.astype(complex))
    val = 0.5 + x[0]
    return complex(val)


def riccati_step(F: np.ndarray, g: np.ndarray, P: np.ndarray) -> np.ndarray:
    """One update of P -> F P F' + (g - F P h)(1 - h'Ph)^{-1}(g - F P h)'."""
    hPh = float(P[0, 0])
    if hPh >= 1.0:
        raise InvalidBranchError(f"h'Ph = {hPh} >= 1 during Riccati iteration")
    q = g - F @ P[:, 0]
    Pn = F @ P @ F.T + np.outer(q, q) / (1.0 - hPh)
    return 0.5 * (Pn + Pn.T)


def _are_residual(F, g, P):
    s = 1.0 - float(P[0, 0])
    q = g - F @ P[:, 0]
    return P - F @ P @ F.T - np.outer(q, q) / s


def _gain_refine(F, g, P, tol, max_steps=40):
    """Gain iteration: alternate the filter gain K = (g - FPh)/(1 - h'Ph)
    with the exact closed-loop Stein solve

        P = (F - Kh') P (F - Kh')' + gK' + Kg' - KK'.

    Quadratically convergent from a nearby start and much better
    conditioned than residual-based polishing near the h'Ph -> 1 boundary
    (no explicit division by 1 - h'Ph in the linear solve)."""
    n = g.size
    eye2 = np.eye(n * n)
    prev_delta = np.inf
    for _ in range(max_steps):
        s = 1.0 - float(P[0, 0])
        if s <= 0.0:
            raise SolverError("gain refinement left the h'Ph < 1 region")
        K = (g - F @ P[:, 0]) / s
        A = F.copy()
        A[:, 0] -= K
        rhs = np.outer(g, K) + np.outer(K, g) - np.outer(K, K)
        try:
            Pn = np.linalg.solve(
                eye2 - np.kron(A, A), rhs.ravel(order="F")
            ).reshape(n, n, order="F")
        except np.linalg.LinAlgError as exc:
            raise SolverError("closed-loop Stein equation singular") from exc
        Pn = 0.5 * (Pn + Pn.T)
        delta = np.linalg.norm(Pn - P, "fro")
        P = Pn
        if delta <= tol:
            return P
        if delta < 1e-9 and delta > 0.25 * prev_delta:
            return P  # roundoff floor reached
        prev_delta = delta
    raise SolverError("gain refinement did not converge")


def solve_are_minimal(
    a, g, tol: float = 1e-12, max_iter: int = 200_000
) -> np.ndarray:
    """Minimal solution of the classical discrete ARE
    P = F P F' + (g - F P h)(1 - h'Ph)^{-1}(g - F P h)'.

    Fixed-point iteration from P = 0; the iterates increase monotonically
    in the positive semidefinite order, so the limit is the minimal
    solution.  Requires a(z) Schur for convergence.  The (1 - h'Ph)^{-1}
    factor amplifies per-step roundoff near the branch boundary and can
    floor the plain iteration above tol; a closed-loop gain refinement
    finishes the job in that case.
    """
    a = np.asarray(a, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    F = companion(a)
    P = np.zeros((a.size, a.size))
    coarse = max(tol, 1e-8)
    for _ in range(max_iter):
        Pn = riccati_step(F, g, P)
        delta = np.linalg.norm(Pn - P, "fro")
        P = Pn
        if delta <= coarse:
            break
    else:
        raise SolverError(
            f"ARE fixed point did not reach {coarse:g} in {max_iter} iterations"
        )
    if coarse <= tol and np.linalg.norm(_are_residual(F, g, P), "fro") <= tol:
        return P
    return _gain_refine(F, g, P, tol)


def gamma_riccati_step(Gamma: np.ndarray, g: np.ndarray, P: np.ndarray) -> np.ndarray:
    """One update of the companion-form equation with frozen g:
    P -> Gamma (P - P h h' P) Gamma' + g g'."""
    Ph = P[:, 0]
    Pn = Gamma @ (P - np.outer(Ph, Ph)) @ Gamma.T + np.outer(g, g)
    return 0.5 * (Pn + Pn.T)


def solve_riccati_gamma(
    sigma, g, tol: float = 1e-12, max_iter: int = 30_000
) -> np.ndarray:
    """Minimal solution of P = Gamma (P - P h h' P) Gamma' + g g' with Gamma
    the companion matrix of sigma and g held fixed.

    Tries the plain fixed point from 0 first; when it diverges or stalls
    (the equation shares the repelling-solution failure mode of the full
    parameter-dependent version), continues with the warm-started Newton
    ramp from 0, which tracks the minimal branch.  The frozen-g equation is
    the parameter-dependent one with u = g and U = 0, so the same machinery
    applies unchanged.
    """
    sigma = np.asarray(sigma, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    Gamma = companion(sigma)
    P = np.zeros((sigma.size, sigma.size))
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter):
            Pn = gamma_riccati_step(Gamma, g, P)
            if not np.all(np.isfinite(Pn)):
                break
            delta = np.linalg.norm(Pn - P, "fro")
            P = Pn
            if delta <= tol:
                return P
    prob = CEEProblem(sigma=sigma, u=g, U=np.zeros((sigma.size, sigma.size)))
    P, _ = _newton_ramped(prob, SolveOptions(tol=tol))
    return P


def k_and_rho(P: np.ndarray, sigma, a, g) -> tuple[np.ndarray, float, float]:
    """Spectral-factor input vector and gain, computed both ways.

    Route 1 (stochastic realization): rho = sqrt(1 - h'Ph),
    k = (g - F P h)/rho.  Route 2 (polynomial): k = rho (sigma - a).
    Returns (k, rho, agreement) where agreement is the max-norm gap between
    the two routes; raises :class:`VerificationError` above 1e-10.
    """
    sigma = np.asarray(sigma, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    hPh = float(P[0, 0])
    if hPh >= 1.0:
        raise InvalidBranchError(f"h'Ph = {hPh} >= 1")
    rho = float(np.sqrt(1.0 - hPh))
    F = companion(a)
    k_riccati = (g - F @ P[:, 0]) / rho
    k_poly = rho * (sigma - a)
    agreement = float(np.max(np.abs(k_riccati - k_poly)))
    if agreement > 1e-10:
        raise VerificationError(
            f"spectral-factor vector mismatch between the Riccati and "
            f"polynomial routes: {agreement:.3e}"
        )
    return k_riccati, rho, agreement


@dataclass(frozen=True, eq=False)
class RiccatiComparison:
    P_classical: np.ndarray
    P_companion: np.ndarray
    difference: float
    passed: bool


def compare_riccati_forms(
    a, g, sigma, tol: float = 1e-12, agree_tol: float = 1e-8
) -> RiccatiComparison:
    """Solve the classical ARE and the companion-form equation (frozen g)
    independently and compare their minimal solutions."""
    P27 = solve_are_minimal(a, g, tol=tol)
    P29 = solve_riccati_gamma(sigma, g, tol=tol)
    diff = float(np.linalg.norm(P27 - P29, "fro"))
    return RiccatiComparison(
        P_classical=P27,
        P_companion=P29,
        difference=diff,
        passed=diff <= agree_tol,
    )
