"""MINRES for Hermitian least-squares with a one-step lifting correction.

The solver runs the classical three-term Lanczos / Givens recurrence and
stops either when the residual reaches zero (beta hits zero) or when the
Krylov subspace stops growing with a nonzero residual (the projected
triangular entry gamma hits zero).  In the latter case the final iterate is
generally not the minimum-norm solution; ``lift`` removes its component
along the final residual, which recovers the pseudo-inverse solution
exactly at the final iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (HERMITIAN, SKEW_HERMITIAN, CallableOperator,
                   LinearOperator, as_vector, norm)

TERM_BETA_ZERO = "beta_zero"
TERM_GAMMA_ZERO = "gamma_zero"
TERM_RESIDUAL_TARGET = "residual_target"
TERM_MAX_ITER = "max_iter"
TERM_NULL_PRECONDITIONED_RHS = "b_in_null_m"


@dataclass
class SolveOptions:
    """Solver knobs.

    ``eps_zero`` scales the floating-point zero tests: beta_{t+1} is
    declared zero at beta_{t+1} <= eps_zero * beta_1 and the rotated pivot
    gamma at gamma^[2] <= eps_zero * (|alpha_t| + beta_t + beta_{t+1}).
    Both quantities vanish exactly at the grade in exact arithmetic; their
    roundoff floor sits around 1e-12 of the problem scale, so a threshold
    below 1e-10 risks missing the termination and dividing by a noise-level
    pivot.

    ``normal_residual_target`` is the robust companion of the gamma test:
    phi_{t-1} * hypot(gamma_t, delta_{t+1}) estimates ||A r_{t-1}||, which
    vanishes exactly when the least-squares problem is solved.  Once it
    falls below the target relative to ||A r_0|| the current step is
    completed and the solve stops as grade-reached, before the direction
    recurrence starts compounding noise-level pivots (the regime MINRES-QLP
    was designed for).  Set to None to disable.
    """

    max_iterations: int | None = None     # default: 2 d + 10
    eps_zero: float = 1e-8                # relative zero test for beta, gamma
    residual_target: float | None = None  # relative ||r|| target (plumbing)
    normal_residual_target: float | None = 1e-8  # relative ||A r|| stop
    record_trace: bool = False
    reorthogonalize: bool = False

    def resolved_max_iterations(self, dim: int) -> int:
        if self.max_iterations is None:
            return 2 * dim + 10
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        return self.max_iterations


@dataclass
class Trace:
    """Per-iteration quantities of a recorded solve (index 0 is t = 1)."""

    iterates: list = field(default_factory=list)       # x_t
    residuals: list = field(default_factory=list)      # r_t (or proxies' base)
    phis: list = field(default_factory=list)           # phi_t = ||r_t||
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)          # beta_{t+1}
    gammas_pre: list = field(default_factory=list)     # gamma_t before rotation
    gammas2: list = field(default_factory=list)        # gamma_t^[2]
    cs: list = field(default_factory=list)
    ss: list = field(default_factory=list)
    taus: list = field(default_factory=list)
    deltas2: list = field(default_factory=list)        # delta_t^[2]
    basis: list = field(default_factory=list)          # v_t (Lanczos/Saunders)
    directions: list = field(default_factory=list)     # d_t
    # preconditioned extras
    zs: list = field(default_factory=list)             # z_t
    ws: list = field(default_factory=list)             # w_t
    rhats: list = field(default_factory=list)          # r_hat_t
    rbreves: list = field(default_factory=list)        # r_breve_t


@dataclass
class SolveReport:
    x: np.ndarray
    r: np.ndarray | None
    phi: float
    norm_b: float
    termination: str
    iterations: int
    grade: int | None
    kind: str
    preconditioned: bool = False
    r_hat: np.ndarray | None = None
    r_breve: np.ndarray | None = None
    trace: Trace | None = None
    beta1: float | None = None            # sqrt(<b, M b>) in preconditioned runs
    reduced: "SolveReport | None" = None  # reduced-space report from subsolve


def lift(x: np.ndarray, r: np.ndarray, zero_tol: float = 0.0) -> np.ndarray:
    """Lifted vector x - (<r, x> / ||r||^2) r.

    With r the final MINRES residual this is the pseudo-inverse solution;
    at earlier iterations it is the orthogonal projection of x onto
    A K_t(A, b).  A (near-)zero r returns x unchanged.
    """
    x = np.asarray(x, dtype=np.complex128)
    r = as_vector(r, x.shape[0])
    nr = norm(r)
    if nr <= zero_tol or nr == 0.0:
        return x.copy()
    return x - (np.vdot(r, x) / (nr * nr)) * r


def solve(a: LinearOperator, b, opts: SolveOptions | None = None) -> SolveReport:
    """MINRES on a Hermitian operator; x_t minimizes ||b - A x|| over
    K_t(A, b) at every iteration."""
    if a.kind != HERMITIAN:
        raise ValueError(f"solve expects a hermitian operator, got {a.kind!r}")
    return _minres_body(a, b, opts or SolveOptions(), complex_symmetric=False)


def solve_skew(a: LinearOperator, b, opts: SolveOptions | None = None) -> SolveReport:
    """MINRES for a skew-Hermitian system, run on (iA, ib).

    The report's residual is r = ib - iA x, and lifting that report's final
    iterate yields A^+ b because [iA]^+ (ib) = A^+ b.
    """
    if a.kind != SKEW_HERMITIAN:
        raise ValueError(f"solve_skew expects a skew-hermitian operator, got {a.kind!r}")
    ia = CallableOperator(a.dim, HERMITIAN, lambda v: 1j * a.apply(v))
    report = _minres_body(ia, 1j * as_vector(b, a.dim), opts or SolveOptions(),
                          complex_symmetric=False)
    report.kind = SKEW_HERMITIAN
    return report


def _minres_body(a: LinearOperator, b, opts: SolveOptions,
                 complex_symmetric: bool) -> SolveReport:
    """Shared Algorithm-1 loop; the complex-symmetric flag switches in the
    Saunders-process modifications (A conj(v) products, complex rotation
    cosine, conjugated direction update and residual recurrence)."""
    b = as_vector(b, a.dim)
    d = a.dim
    kind = "complex_symmetric" if complex_symmetric else HERMITIAN
    norm_b = norm(b)
    zeros = np.zeros(d, dtype=np.complex128)
    trace = Trace() if opts.record_trace else None
    if norm_b == 0.0:
        return SolveReport(x=zeros.copy(), r=zeros.copy(), phi=0.0,
                           norm_b=0.0, termination=TERM_BETA_ZERO,
                           iterations=0, grade=0, kind=kind, trace=trace)

    eps_z = opts.eps_zero
    max_iter = opts.resolved_max_iterations(d)
    beta1 = norm_b
    phi = beta1
    v_prev = zeros.copy()
    v = b / beta1
    beta = beta1
    c: complex = -1.0
    s = 0.0
    delta: complex = 0.0      # delta_t entering the next rotation
    eps_next = 0.0
    x = zeros.copy()
    d1 = zeros.copy()         # d_{t-1}
    d2 = zeros.copy()         # d_{t-2}
    r = b.copy()
    basis = [v.copy()] if opts.reorthogonalize else None

    termination = TERM_MAX_ITER
    g = None
    t = 0
    for t in range(1, max_iter + 1):
        q = a.apply_conj(v) if complex_symmetric else a.apply(v)
        alpha = np.vdot(v, q)
        if not complex_symmetric:
            alpha = alpha.real
        q = q - alpha * v - beta * v_prev
        if opts.reorthogonalize:
            for u in basis:
                q -= u * np.vdot(u, q)
        beta_next = norm(q)

        # previous rotation applied to the new tridiagonal column
        delta2 = (np.conj(c) if complex_symmetric else c) * delta + s * alpha
        gamma_pre = s * delta - c * alpha
        eps_cur = eps_next
        eps_next = s * beta_next
        delta = -c * beta_next
        gamma2 = np.sqrt(abs(gamma_pre) ** 2 + beta_next**2)

        # ||A r_{t-1}|| estimate; zero exactly when least squares is solved
        arnorm_prev = phi * np.hypot(abs(gamma_pre), abs(delta))
        if t == 1:
            arnorm0 = arnorm_prev
        ls_converged = (opts.normal_residual_target is not None and t > 1
                        and arnorm_prev <= opts.normal_residual_target * arnorm0)

        if gamma2 <= eps_z * (abs(alpha) + beta + beta_next):
            # Krylov/Saunders space exhausted with nonzero residual: the
            # iterate freezes one step back and the grade is t.
            g = t
            termination = TERM_GAMMA_ZERO
            if trace is not None:
                _record(trace, x, r, phi, alpha, beta_next, gamma_pre, 0.0,
                        0.0, 1.0, 0.0, delta2, v, d1)
            break

        c = gamma_pre / gamma2
        s = beta_next / gamma2
        tau = (np.conj(c) if complex_symmetric else c) * phi
        phi = s * phi
        head = np.conj(v) if complex_symmetric else v
        dvec = (head - delta2 * d1 - eps_cur * d2) / gamma2
        d2 = d1
        d1 = dvec
        x = x + tau * dvec

        if beta_next <= eps_z * beta1:
            g = t
            termination = TERM_BETA_ZERO
            r = zeros.copy()
            if trace is not None:
                _record(trace, x, r, phi, alpha, beta_next, gamma_pre, gamma2,
                        c, s, tau, delta2, v, dvec)
            break

        v_next = q / beta_next
        r = (s * s) * r - (phi * (np.conj(c) if complex_symmetric else c)) * v_next
        if trace is not None:
            _record(trace, x, r, phi, alpha, beta_next, gamma_pre, gamma2,
                    c, s, tau, delta2, v, dvec)
        if ls_converged:
            # the normal-equation residual has hit its target: the grade is
            # reached in floating point and further steps only compound
            # roundoff through the direction recurrence
            g = t
            termination = TERM_GAMMA_ZERO
            break
        v_prev = v
        v = v_next
        beta = beta_next
        if basis is not None:
            basis.append(v.copy())

        if opts.residual_target is not None and phi <= opts.residual_target * beta1:
            termination = TERM_RESIDUAL_TARGET
            break

    return SolveReport(x=x, r=r, phi=float(phi), norm_b=norm_b,
                       termination=termination, iterations=t, grade=g,
                       kind=kind, trace=trace)


def _record(trace, x, r, phi, alpha, beta_next, gamma_pre, gamma2, c, s, tau,
            delta2, v, dvec):
    trace.iterates.append(x.copy())
    trace.residuals.append(r.copy())
    trace.phis.append(float(phi))
    trace.alphas.append(complex(alpha))
    trace.betas.append(float(beta_next))
    trace.gammas_pre.append(complex(gamma_pre))
    trace.gammas2.append(float(gamma2))
    trace.cs.append(complex(c))
    trace.ss.append(float(s))
    trace.taus.append(complex(tau))
    trace.deltas2.append(complex(delta2))
    trace.basis.append(v.copy())
    trace.directions.append(dvec.copy())
