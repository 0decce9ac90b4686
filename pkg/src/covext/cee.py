"""The covariance extension equation and its solvers.

The equation is the nonstandard symmetric matrix Riccati fixed point

    P = Gamma (P - P h h' P) Gamma' + g(P) g(P)',
    g(P) = u + U sigma + U Gamma P h,

with Gamma the companion matrix of the numerator polynomial sigma(z) and
h the first standard basis vector.  Its unique symmetric solution with
h'Ph < 1 yields the denominator a(z) and gain rho of the shaping filter

    a = (I - U)(Gamma P h + sigma) - u,      rho = sqrt(1 - h'Ph).

Everything here is parameter-agnostic: (u, U) may come from covariance
data or from interpolation data and the solver code path is identical.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .covdata import (
    CovarianceSequence,
    CovParams,
    _strict_lower_toeplitz,
    build_cov_params,
)
from .errors import DataError, InvalidBranchError, SolverError
from .polyalg import SchurPolynomial, is_schur, reflection_to_tail


def companion(vec) -> np.ndarray:
    """Companion matrix J - v h' of z^n + v_1 z^{n-1} + ... + v_n: first
    column -v, ones on the superdiagonal."""
    v = np.asarray(vec, dtype=float).ravel()
    n = v.size
    F = np.zeros((n, n))
    F[:, 0] = -v
    idx = np.arange(n - 1)
    F[idx, idx + 1] = 1.0
    return F


@dataclass(frozen=True, eq=False)
class CEEProblem:
    """Assembled problem data (sigma, Gamma, h, u, U).

    ``source`` records where (u, U) came from ("covariance" or
    "interpolation"); the solver itself never consults it.
    """

    sigma: np.ndarray
    u: np.ndarray
    U: np.ndarray
    source: str = "covariance"
    Gamma: np.ndarray = field(init=False)

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float).ravel().copy()
        u = np.asarray(self.u, dtype=float).ravel().copy()
        U = np.asarray(self.U, dtype=float).copy()
        n = sigma.size
        if n < 1:
            raise DataError("problem dimension must be at least 1")
        if u.size != n or U.shape != (n, n):
            raise DataError(
                f"dimension mismatch: len(sigma) = {n}, len(u) = {u.size}, "
                f"U.shape = {U.shape}"
            )
        if self.source not in ("covariance", "interpolation"):
            raise DataError(f"unknown source tag {self.source!r}")
        if not is_schur(sigma):
            raise DataError("sigma must be a Schur polynomial")
        Gamma = companion(sigma)
        for arr in (sigma, u, U, Gamma):
            arr.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "Gamma", Gamma)

    @property
    def n(self) -> int:
        return self.sigma.size

    @property
    def h(self) -> np.ndarray:
        h = np.zeros(self.n)
        h[0] = 1.0
        return h


@dataclass(frozen=True, eq=False)
class CEESolution:
    """Solution bundle: P with h'Ph < 1, extracted (a, rho), derived b."""

    P: np.ndarray
    a: np.ndarray
    rho: float
    b: np.ndarray
    rank: int
    residual: float
    iterations: int
    method: str
    a_is_schur: bool

    @property
    def hPh(self) -> float:
        return float(self.P[0, 0])


@dataclass(frozen=True)
class SolveOptions:
    """Solver controls.

    method "auto" runs the fixed-point iteration from P = 0 and falls back
    to the Newton stage (warm-started from the last iterate where possible)
    when the sweep diverges or fails to reach ``tol`` within ``max_iter``
    steps.  ``divergence_guard`` aborts the fixed-point sweep once
    h'Ph >= 1 after a grace period; appropriate when the data is known to
    be a positive covariance sequence.
    """

    tol: float = 1e-12
    max_iter: int = 100_000
    method: str = "auto"
    newton_max_iter: int = 100
    divergence_guard: bool = True
    grace: int = 10
    rank_tol: float = 1e-8

    def __post_init__(self):
        if self.method not in ("auto", "fixed-point", "newton"):
            raise DataError(f"unknown method {self.method!r}")
        if not self.tol > 0.0:
            raise DataError("tol must be positive")


def build_problem(params: CovParams, sigma: SchurPolynomial) -> CEEProblem:
    """Problem from covariance-side parameters and numerator polynomial."""
    if params.n != sigma.degree:
        raise DataError(
            f"dimension mismatch: params have n = {params.n}, "
            f"sigma has degree {sigma.degree}"
        )
    return CEEProblem(sigma=sigma.coeffs, u=params.u, U=params.U, source="covariance")


def problem_from_covariances(c: CovarianceSequence, sigma: SchurPolynomial) -> CEEProblem:
    return build_problem(build_cov_params(c), sigma)


def g_of_P(prob: CEEProblem, P: np.ndarray) -> np.ndarray:
    """g(P) = u + U sigma + U Gamma P h."""
    return prob.u + prob.U @ (prob.sigma + prob.Gamma @ P[:, 0])


def fixed_point_step(prob: CEEProblem, P: np.ndarray) -> np.ndarray:
    """One symmetrized update P -> Gamma (P - P h h' P) Gamma' + g(P) g(P)'."""
    Ph = P[:, 0]
    g = g_of_P(prob, P)
    Pn = prob.Gamma @ (P - np.outer(Ph, Ph)) @ prob.Gamma.T + np.outer(g, g)
    return 0.5 * (Pn + Pn.T)


def cee_residual(prob: CEEProblem, P: np.ndarray) -> float:
    """Frobenius norm of P - Gamma (P - P h h' P) Gamma' - g(P) g(P)'."""
    Ph = P[:, 0]
    g = g_of_P(prob, P)
    R = P - prob.Gamma @ (P - np.outer(Ph, Ph)) @ prob.Gamma.T - np.outer(g, g)
    return float(np.linalg.norm(R, "fro"))


def extract_filter(prob: CEEProblem, P: np.ndarray) -> tuple[np.ndarray, float]:
    """Denominator coefficients and gain from a solution P.

    a = (I - U)(Gamma P h + sigma) - u and rho = sqrt(1 - h'Ph).  The
    returned a(z) should be Schur at a converged solution; the caller is
    expected to check (a non-Schur result indicates an unconverged or
    wrong-branch P).
    """
    hPh = float(P[0, 0])
    if hPh >= 1.0:
        raise InvalidBranchError(f"h'Ph = {hPh} >= 1; no spectral factor exists")
    n = prob.n
    a = (np.eye(n) - prob.U) @ (prob.Gamma @ P[:, 0] + prob.sigma) - prob.u
    rho = float(np.sqrt(1.0 - hPh))
    return a, rho


def rank_P(P: np.ndarray, rank_tol: float = 1e-8) -> int:
    """Singular values above rank_tol * max(s_max, 1)."""
    s = np.linalg.svd(P, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > rank_tol * max(float(s[0]), 1.0)))


def _residual_matrix(prob: CEEProblem, P: np.ndarray) -> np.ndarray:
    Ph = P[:, 0]
    g = g_of_P(prob, P)
    return P - prob.Gamma @ (P - np.outer(Ph, Ph)) @ prob.Gamma.T - np.outer(g, g)


def _newton_jacobian(prob: CEEProblem, P: np.ndarray) -> np.ndarray:
    """Jacobian of the residual map on vec(P) (column-major)."""
    n = prob.n
    G = prob.Gamma
    UG = prob.U @ G
    g = g_of_P(prob, P)
    GPhh = np.zeros((n, n))
    GPhh[:, 0] = G @ P[:, 0]
    ghT = np.zeros((n, n))
    ghT[:, 0] = g
    return (
        np.eye(n * n)
        - np.kron(G, G)
        + np.kron(GPhh, G)
        + np.kron(G, GPhh)
        - np.kron(ghT, UG)
        - np.kron(UG, ghT)
    )


def _try_step(prob, P, R, rnorm, step, tol):
    """Backtracking on ||R||_F; returns (P, R, rnorm) or None."""
    t = 1.0
    while t > 1e-10:
        Pt = P - t * step
        Pt = 0.5 * (Pt + Pt.T)
        Rt = _residual_matrix(prob, Pt)
        rt = np.linalg.norm(Rt, "fro")
        if rt < rnorm * (1.0 - 1e-4 * t) or rt <= tol:
            return Pt, Rt, rt
        t *= 0.5
    return None


def _newton(prob: CEEProblem, P0: np.ndarray, opts: SolveOptions) -> tuple[np.ndarray, int]:
    """Damped Newton on the residual map, with a Levenberg-Marquardt
    regularized step whenever the pure Newton direction fails to descend
    (ill-conditioned Jacobian far from the solution)."""
    P = 0.5 * (P0 + P0.T)
    R = _residual_matrix(prob, P)
    rnorm = np.linalg.norm(R, "fro")
    for it in range(1, opts.newton_max_iter + 1):
        if rnorm <= opts.tol:
            return P, it - 1
        J = _newton_jacobian(prob, P)
        r = R.ravel(order="F")
        moved = None
        try:
            step = np.linalg.solve(J, r).reshape(prob.n, prob.n, order="F")
            moved = _try_step(prob, P, R, rnorm, step, opts.tol)
        except np.linalg.LinAlgError:
            pass
        if moved is None:
            JtJ = J.T @ J
            Jtr = J.T @ r
            lam = 1e-8 * float(np.trace(JtJ)) / JtJ.shape[0]
            while moved is None and lam < 1e8:
                try:
                    step = np.linalg.solve(
                        JtJ + lam * np.eye(JtJ.shape[0]), Jtr
                    ).reshape(prob.n, prob.n, order="F")
                    moved = _try_step(prob, P, R, rnorm, step, opts.tol)
                except np.linalg.LinAlgError:
                    pass
                lam *= 10.0
        if moved is None:
            raise SolverError(
                f"Newton stalled at a nonzero residual {rnorm:.3e}"
            )
        P, R, rnorm = moved
    if rnorm <= opts.tol:
        return P, opts.newton_max_iter
    raise SolverError(
        f"Newton did not converge in {opts.newton_max_iter} iterations "
        f"(last residual {rnorm:.3e})"
    )


def _on_valid_branch(P: np.ndarray) -> bool:
    """The sought solution is a state covariance: symmetric positive
    semidefinite with h'Ph < 1.  The equation has further exact symmetric
    solutions with h'Ph < 1 that are indefinite or negative definite;
    those must be rejected."""
    if not np.all(np.isfinite(P)):
        return False
    if P[0, 0] >= 1.0:
        return False
    lam_min = float(np.linalg.eigvalsh(P)[0])
    scale = max(1.0, float(np.max(np.abs(P))))
    return lam_min >= -1e-9 * scale


def _sequence_from_u(u: np.ndarray) -> np.ndarray:
    """Invert the expansion recursion: the sequence tail (c_1, ..., c_n)
    whose expansion parameters are u."""
    n = u.size
    c = np.zeros(n)
    for k in range(n):
        c[k] = u[k] + np.dot(c[:k][::-1], u[:k])
    return c


def _ramp_family(prob: CEEProblem):
    """Path t -> CEEProblem(t) with a trivially solvable start at t = 0.

    When U is exactly the strictly lower-triangular Toeplitz matrix of u
    (parameters that encode a covariance sequence), the path scales the
    underlying sequence, c(t) = t c: its Toeplitz matrix is a convex
    combination with the identity, so every intermediate problem is a
    positive-sequence problem and the PSD branch exists along the whole
    path.  Otherwise (general interpolation-type parameters) the path
    scales (u, U) directly, which is heuristic but ends at the original
    problem all the same.
    """
    if np.array_equal(prob.U, _strict_lower_toeplitz(prob.u)):
        c_tail = _sequence_from_u(prob.u)

        def family(t: float) -> CEEProblem:
            u_t = np.zeros(prob.n)
            ct = t * c_tail
            for k in range(prob.n):
                u_t[k] = ct[k] - np.dot(ct[:k][::-1], u_t[:k])
            return CEEProblem(
                sigma=prob.sigma, u=u_t, U=_strict_lower_toeplitz(u_t),
                source=prob.source,
            )

    else:

        def family(t: float) -> CEEProblem:
            return CEEProblem(
                sigma=prob.sigma, u=t * prob.u, U=t * prob.U,
                source=prob.source,
            )

    return family


def _newton_ramped(prob: CEEProblem, opts: SolveOptions) -> tuple[np.ndarray, int]:
    """Globalized Newton: warm-started solves along a data ramp t: 0 -> 1.

    At t = 0 the parameters vanish and P = 0 is the exact solution; each
    substep reuses the previous solution as the Newton start, with the step
    in t halved whenever a substep fails or leaves the positive
    semidefinite h'Ph < 1 branch.  The plain damped Newton iteration can
    stall or land on a spurious non-PSD solution when started far away;
    tracking the branch from t = 0 removes both failure modes.  A final
    polish runs on the original problem itself.
    """
    family = _ramp_family(prob)
    # intermediate problems only seed the next warm start; they do not need
    # the final tolerance, and grinding on a hard substep is worse than
    # failing fast and halving the ramp step
    sub_opts = replace(
        opts, tol=max(opts.tol, 1e-9),
        newton_max_iter=min(opts.newton_max_iter, 25),
    )
    P = np.zeros((prob.n, prob.n))
    P_prev = None
    t = 0.0
    t_prev = 0.0
    total = 0
    step = 0.5
    while t < 1.0:
        t_next = min(1.0, t + step)
        if P_prev is not None and t > t_prev:
            # secant predictor along the branch
            start = P + (P - P_prev) * ((t_next - t) / (t - t_prev))
        else:
            start = P
        try:
            P_next, nits = _newton(family(t_next), start, sub_opts)
            if not _on_valid_branch(P_next):
                raise SolverError("left the PSD h'Ph < 1 branch along the ramp")
        except SolverError:
            step *= 0.5
            if step < 1e-9:
                raise SolverError(
                    f"continuation stalled at t = {t:.9f}"
                ) from None
            continue
        total += nits
        P_prev, t_prev = P, t
        P, t = P_next, t_next
        step = min(2.0 * step, 0.5)
    P, nits = _newton(prob, P, opts)
    total += nits
    if not _on_valid_branch(P):
        raise SolverError("continuation ended off the PSD h'Ph < 1 branch")
    return P, total


def _fixed_point(
    prob: CEEProblem, opts: SolveOptions
) -> tuple[np.ndarray, int, str]:
    """Plain iteration from P = 0.  Returns (P, iterations, status) with
    status in {"converged", "diverged", "exhausted"}."""
    P = np.zeros((prob.n, prob.n))
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, opts.max_iter + 1):
            Pn = fixed_point_step(prob, P)
            if not np.all(np.isfinite(Pn)):
                return P, it, "diverged"
            delta = np.linalg.norm(Pn - P, "fro")
            P = Pn
            if delta <= opts.tol:
                return P, it, "converged"
            if opts.divergence_guard and it > opts.grace and P[0, 0] >= 1.0:
                return P, it, "diverged"
    return P, opts.max_iter, "exhausted"


def _newton_chain(
    prob: CEEProblem, P0: np.ndarray, opts: SolveOptions
) -> tuple[np.ndarray, int]:
    """Damped Newton from P0, falling back to the ramped continuation when
    it stalls or converges off the PSD h'Ph < 1 branch."""
    try:
        P, its = _newton(prob, P0, opts)
        if _on_valid_branch(P):
            return P, its
    except SolverError:
        pass
    return _newton_ramped(prob, opts)


def solve_cee(prob: CEEProblem, options: Optional[SolveOptions] = None) -> CEESolution:
    """Solve the covariance extension equation for the h'Ph < 1 branch.

    Returns the solution bundle with extracted (a, rho), derived numerator
    b = a + 2 g(P), numerical rank of P and the final residual.  Raises
    :class:`SolverError` on non-convergence (message carries the last
    residual) and :class:`InvalidBranchError` if the converged P has
    h'Ph >= 1.

    The plain fixed-point iteration has no global convergence guarantee:
    the solution can be a repelling fixed point of the iteration map, in
    which case the sweep trips the divergence guard or exhausts its budget
    and (under method "auto") the Newton stage takes over.
    """
    opts = options or SolveOptions()
    if opts.method == "newton":
        P, its = _newton_chain(prob, np.zeros((prob.n, prob.n)), opts)
        method = "newton"
    else:
        P, its, status = _fixed_point(prob, opts)
        method = "fixed-point"
        if status != "converged":
            if opts.method == "fixed-point":
                if status == "diverged":
                    raise SolverError(
                        f"fixed-point iteration left the h'Ph < 1 region "
                        f"after {its} steps; the solution is not attracting "
                        "for the plain iteration (or the data is not a "
                        "positive covariance sequence)"
                    )
                raise SolverError(
                    f"fixed-point iteration did not reach tol = {opts.tol:g} in "
                    f"{opts.max_iter} iterations "
                    f"(last residual {cee_residual(prob, P):.3e})"
                )
            warm = P if (status == "exhausted" and P[0, 0] < 1.0) else np.zeros(
                (prob.n, prob.n)
            )
            P, nits = _newton_chain(prob, warm, opts)
            its += nits
            method = "fixed-point+newton"
    a, rho = extract_filter(prob, P)
    g = g_of_P(prob, P)
    b = a + 2.0 * g
    a_schur = is_schur(a)
    if not a_schur:
        warnings.warn(
            "extracted denominator is not Schur; treat the solution as "
            "diagnostic only",
            stacklevel=2,
        )
    return CEESolution(
        P=P,
        a=a,
        rho=rho,
        b=b,
        rank=rank_P(P, opts.rank_tol),
        residual=cee_residual(prob, P),
        iterations=its,
        method=method,
        a_is_schur=a_schur,
    )


@dataclass(frozen=True, eq=False)
class PositiveDegreeResult:
    """Outcome of the rank-minimization scan over numerator polynomials."""

    degree: int
    sigma: SchurPolynomial
    evaluated: int
    failures: int


def _sigma_grid(n: int, grid: int, eps: float, seed) -> np.ndarray:
    lo, hi = -1.0 + eps, 1.0 - eps
    if n <= 3:
        axis = np.linspace(lo, hi, grid)
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(grid, n))


def positive_degree(
    c: CovarianceSequence,
    grid: Optional[int] = None,
    rank_tol: float = 1e-8,
    seed: int = 0,
    eps: float = 0.05,
    options: Optional[SolveOptions] = None,
) -> PositiveDegreeResult:
    """Upper-bound estimate of the positive degree: the minimum of rank P
    over a grid of Schur polynomials sigma.

    Schur polynomials are parameterized by reflection coefficients in
    (-1 + eps, 1 - eps)^n; for n <= 3 the grid is uniform with ``grid``
    points per axis (default 11), for larger n it is ``grid`` random draws
    (default 2000, seeded).  The scan is exhaustive over the grid only, so
    the result is an upper bound of the true minimum; the first sigma
    attaining it in scan order is reported.  Solver failures at individual
    grid points are skipped, counted, and summarized in a warning.
    """
    n = c.n
    if n < 1:
        raise DataError("positive degree needs n >= 1")
    if grid is None:
        grid = 11 if n <= 3 else 2000
    if grid < 1:
        raise DataError("grid must be nonempty")
    params = build_cov_params(c)
    opts = options or SolveOptions()
    best_rank: Optional[int] = None
    best_sigma: Optional[SchurPolynomial] = None
    failures = 0
    evaluated = 0
    points = _sigma_grid(n, grid, eps, seed)
    for gammas in points:
        sigma = SchurPolynomial(reflection_to_tail(gammas))
        prob = build_problem(params, sigma)
        try:
            sol = solve_cee(prob, replace(opts, rank_tol=rank_tol))
        except (SolverError, DataError):
            failures += 1
            continue
        evaluated += 1
        if best_rank is None or sol.rank < best_rank:
            best_rank = sol.rank
            best_sigma = sigma
            if best_rank == 0:
                break
    if best_rank is None:
        raise SolverError("every grid point failed; no rank estimate available")
    if failures:
        warnings.warn(
            f"positive-degree scan skipped {failures} of {len(points)} grid "
            "points due to solver failures",
            stacklevel=2,
        )
    return PositiveDegreeResult(
        degree=best_rank,
        sigma=best_sigma,
        evaluated=evaluated,
        failures=failures,
    )
