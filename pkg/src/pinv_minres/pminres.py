"""Preconditioned MINRES with singular positive semi-definite preconditioners.

The right-preconditioned iteration minimizes the M-seminorm of the residual
over K_t(M A, M b) without ever needing M to be invertible.  Two residual
proxies are maintained by cheap recurrences: ``r_hat`` equals M (b - A x_t)
and ``r_breve`` agrees with b - A x_t on range(M); together they allow the
lifting correction without extra operator products.  The reduced solve
(``subsolve``) runs plain MINRES on S^H A S for any factor M = S S^H and is
analytically equivalent, iterate by iterate.
"""

from __future__ import annotations

import numpy as np

from .core import (COMPLEX_SYMMETRIC, HERMITIAN, CallableOperator,
                   LinearOperator, as_vector, norm)
from .minres_h import (TERM_BETA_ZERO, TERM_GAMMA_ZERO, TERM_MAX_ITER,
                       TERM_NULL_PRECONDITIONED_RHS, TERM_RESIDUAL_TARGET,
                       SolveOptions, SolveReport, Trace)
from .minres_cs import lift_cs, solve_cs
from .minres_h import lift, solve


class NotPositiveSemidefinite(RuntimeError):
    """The preconditioner produced a negative <z, M z> beyond roundoff."""


class Preconditioner:
    """PSD operator M, optionally carrying a factor M = S S^H.

    The economy pieces (orthonormal ``p``, positive ``sigma`` with
    M = P diag(sigma) P^H) are kept when known; they give exact ranks,
    pseudo-inverses and range projections for the oracle-facing checks.
    """

    def __init__(self, dim: int, apply_fn, *, rank: int | None = None,
                 p: np.ndarray | None = None, sigma: np.ndarray | None = None,
                 factor: "SubOperator | None" = None,
                 mat: np.ndarray | None = None):
        self.dim = int(dim)
        self._apply = apply_fn
        self.rank = rank
        self.p = p
        self.sigma = None if sigma is None else np.asarray(sigma, dtype=np.float64)
        self.factor = factor
        self._mat = mat

    # -- constructors -------------------------------------------------
    @classmethod
    def identity(cls, dim: int) -> "Preconditioner":
        eye = np.eye(dim, dtype=np.complex128)
        return cls(dim, lambda v: v.copy(), rank=dim, p=eye,
                   sigma=np.ones(dim), factor=DenseSubOperator(eye), mat=eye)

    @classmethod
    def from_matrix(cls, m) -> "Preconditioner":
        m = np.asarray(m, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("preconditioner matrix must be square")
        return cls(m.shape[0], lambda v: m @ v, mat=m)

    @classmethod
    def from_factor(cls, s) -> "Preconditioner":
        """M = S S^H for a dense d x m factor S."""
        s = np.asarray(s, dtype=np.complex128)
        sh = s.conj().T
        return cls(s.shape[0], lambda v: s @ (sh @ v),
                   rank=None, factor=DenseSubOperator(s))

    @classmethod
    def from_economy(cls, p, sigma) -> "Preconditioner":
        """M = P diag(sigma) P^H with orthonormal P and sigma > 0."""
        p = np.asarray(p, dtype=np.complex128)
        sigma = np.asarray(sigma, dtype=np.float64)
        if p.shape[1] != sigma.shape[0]:
            raise ValueError("basis/weight size mismatch")
        if np.any(sigma <= 0):
            raise ValueError("economy weights must be strictly positive")
        ph = p.conj().T
        factor = DenseSubOperator(p * np.sqrt(sigma))
        return cls(p.shape[0], lambda v: p @ (sigma * (ph @ v)),
                   rank=p.shape[1], p=p, sigma=sigma, factor=factor)

    # -- operations ---------------------------------------------------
    def apply(self, v) -> np.ndarray:
        v = as_vector(v, self.dim)
        return np.asarray(self._apply(v), dtype=np.complex128)

    def matrix(self) -> np.ndarray:
        if self._mat is None:
            if self.p is not None:
                self._mat = (self.p * self.sigma) @ self.p.conj().T
            elif isinstance(self.factor, DenseSubOperator):
                s = self.factor.s
                self._mat = s @ s.conj().T
            else:
                cols = np.eye(self.dim, dtype=np.complex128)
                self._mat = np.stack([self.apply(cols[:, j])
                                      for j in range(self.dim)], axis=1)
        return self._mat

    def pinv_matrix(self) -> np.ndarray:
        if self.p is not None:
            return (self.p / self.sigma) @ self.p.conj().T
        return np.linalg.pinv(self.matrix(), rcond=1e-12, hermitian=True)

    def range_basis(self) -> np.ndarray:
        """Orthonormal basis of range(M)."""
        if self.p is not None:
            return self.p
        from .oracle import hermitian_eig
        return hermitian_eig(self.matrix()).u

    def probe_psd(self, trials: int = 10, seed: int = 0) -> bool:
        rng = np.random.Generator(np.random.Philox(seed))
        for _ in range(trials):
            v = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
            mv = self.apply(v)
            q = np.vdot(v, mv)
            scale = norm(v) * norm(mv) + 1e-300
            if q.real < -1e-12 * scale or abs(q.imag) > 1e-10 * scale:
                return False
        return True


class SubOperator:
    """Matrix-free sub-preconditioner factor S in C^{d x m}."""

    def __init__(self, d: int, m: int):
        self.d = int(d)
        self.m = int(m)

    def apply(self, v) -> np.ndarray:          # S v
        raise NotImplementedError

    def apply_adjoint(self, v) -> np.ndarray:  # S^H v
        raise NotImplementedError

    def apply_transpose(self, v) -> np.ndarray:  # S^T v
        return np.conj(self.apply_adjoint(np.conj(as_vector(v, self.d))))

    def apply_conj(self, v) -> np.ndarray:       # conj(S) v
        return np.conj(self.apply(np.conj(as_vector(v, self.m))))

    def preconditioner(self) -> Preconditioner:
        return Preconditioner(self.d, lambda v: self.apply(self.apply_adjoint(v)),
                              factor=self)


class DenseSubOperator(SubOperator):
    def __init__(self, s):
        s = np.asarray(s, dtype=np.complex128)
        if s.ndim != 2:
            raise ValueError("factor must be a matrix")
        super().__init__(s.shape[0], s.shape[1])
        self.s = s

    def apply(self, v):
        return self.s @ as_vector(v, self.m)

    def apply_adjoint(self, v):
        return self.s.conj().T @ as_vector(v, self.d)


class KroneckerSubOperator(SubOperator):
    """S = C (x) C for a real n x rc factor C (row-major flattening)."""

    def __init__(self, c):
        c = np.asarray(c, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError("Kronecker sub-factor must be a matrix")
        self.c = c
        self.n, self.rc = c.shape
        super().__init__(self.n * self.n, self.rc * self.rc)

    def apply(self, v):
        x = as_vector(v, self.m).reshape(self.rc, self.rc)
        return (self.c @ x @ self.c.T).reshape(-1)

    def apply_adjoint(self, v):
        y = as_vector(v, self.d).reshape(self.n, self.n)
        return (self.c.T @ y @ self.c).reshape(-1)


class ReorthBuffer:
    """Accumulated rank-one reorthogonalization pairs (z_i/beta_i, w_i/beta_i).

    Applying the buffer restores orthogonality of the implied reduced-space
    Lanczos (or Saunders) vectors: z <- z - Y z and w <- w - Y^H w (Y^T in
    the complex-symmetric variant), with Y = sum_i (z_i w_i^H) / beta_i^2.
    """

    def __init__(self, complex_symmetric: bool = False):
        self.complex_symmetric = complex_symmetric
        self.pairs: list[tuple[np.ndarray, np.ndarray]] = []

    def push(self, z_over_beta: np.ndarray, w_over_beta: np.ndarray):
        self.pairs.append((z_over_beta.copy(), w_over_beta.copy()))

    def apply(self, z: np.ndarray, w: np.ndarray):
        if not self.pairs:
            return z, w
        yz = np.zeros_like(z)
        yw = np.zeros_like(w)
        if self.complex_symmetric:
            for zi, wi in self.pairs:
                yz += zi * np.dot(wi, z)
                yw += wi * np.dot(zi, w)
        else:
            for zi, wi in self.pairs:
                yz += zi * np.vdot(wi, z)
                yw += wi * np.vdot(zi, w)
        return z - yz, w - yw


def reorthogonalize(z: np.ndarray, w: np.ndarray, buffer: ReorthBuffer):
    """Project the new (z, w) pair against all previous pairs in the buffer."""
    return buffer.apply(z, w)


def psolve_h(a: LinearOperator, m: Preconditioner, b,
             opts: SolveOptions | None = None) -> SolveReport:
    """Preconditioned MINRES for Hermitian A and PSD M; x_t minimizes
    ||b - A x||_M over K_t(M A, M b)."""
    if a.kind != HERMITIAN:
        raise ValueError(f"psolve_h expects a hermitian operator, got {a.kind!r}")
    return _pminres_body(a, m, b, opts or SolveOptions(), complex_symmetric=False)


def psolve_cs(a: LinearOperator, m: Preconditioner, b,
              opts: SolveOptions | None = None) -> SolveReport:
    """Preconditioned MINRES for complex-symmetric A (Saunders recurrences,
    w_t = M conj(z_t))."""
    if a.kind != COMPLEX_SYMMETRIC:
        raise ValueError(
            f"psolve_cs expects a complex_symmetric operator, got {a.kind!r}")
    return _pminres_body(a, m, b, opts or SolveOptions(), complex_symmetric=True)


def _beta_from(z: np.ndarray, w: np.ndarray, complex_symmetric: bool,
               scale_floor: float = 0.0) -> float:
    """beta^2 = <z, w> (Hermitian) or <conj(z), w> (complex-symmetric),
    clamping tiny negative roundoff and rejecting indefinite preconditioners.

    ``scale_floor`` (the problem scale beta_1^2 inside the loop) keeps the
    sign and realness checks from firing on noise-level pairs: near
    termination w suffers total cancellation and its direction carries no
    information, so only violations at the problem scale are meaningful.
    """
    scale = max(norm(z) * norm(w), scale_floor) + 1e-300
    raw = np.vdot(np.conj(z), w) if complex_symmetric else np.vdot(z, w)
    if raw.real < -1e-12 * scale or abs(raw.imag) > 1e-8 * scale:
        raise NotPositiveSemidefinite(
            f"<z, M z> = {raw:.3e} is negative beyond roundoff scale")
    return float(np.sqrt(max(raw.real, 0.0)))


def _pminres_body(a: LinearOperator, m: Preconditioner, b, opts: SolveOptions,
                  complex_symmetric: bool) -> SolveReport:
    b = as_vector(b, a.dim)
    if m.dim != a.dim:
        raise ValueError("operator and preconditioner dimensions differ")
    d = a.dim
    kind = COMPLEX_SYMMETRIC if complex_symmetric else HERMITIAN
    norm_b = norm(b)
    zeros = np.zeros(d, dtype=np.complex128)
    trace = Trace() if opts.record_trace else None
    eps_z = opts.eps_zero

    z = b.copy()
    w = m.apply(np.conj(z)) if complex_symmetric else m.apply(z)
    beta1 = _beta_from(z, w, complex_symmetric)
    if norm_b == 0.0 or beta1 <= eps_z * np.sqrt(norm(z) * norm(w) + 1e-300):
        return SolveReport(x=zeros.copy(), r=None, phi=0.0, norm_b=norm_b,
                           termination=TERM_NULL_PRECONDITIONED_RHS,
                           iterations=0, grade=None, kind=kind,
                           preconditioned=True, r_hat=zeros.copy(),
                           r_breve=zeros.copy(), trace=trace, beta1=0.0)

    max_iter = opts.resolved_max_iterations(d)
    phi = beta1
    # r_hat_0 = M b (Hermitian) or conj(M) b (complex-symmetric, where the
    # proxy is conj(S) S^T r throughout, hence the conjugated start)
    rhat = np.conj(w) if complex_symmetric else w.copy()
    rbrev = z.copy()      # r_breve_0 = b
    z_prev = zeros.copy()
    beta = beta1
    beta_prev = beta1     # beta_0 := beta_1; the z_0 term vanishes anyway
    c: complex = -1.0
    s = 0.0
    delta: complex = 0.0
    eps_next = 0.0
    x = zeros.copy()
    d1 = zeros.copy()
    d2 = zeros.copy()
    buffer = ReorthBuffer(complex_symmetric) if opts.reorthogonalize else None
    if buffer is not None:
        buffer.push(z / beta1, w / beta1)

    termination = TERM_MAX_ITER
    g = None
    t = 0
    for t in range(1, max_iter + 1):
        qt = a.apply(w) / beta
        alpha = np.vdot(np.conj(w) if complex_symmetric else w, qt) / beta
        if not complex_symmetric:
            alpha = alpha.real
        z_next = qt - (alpha / beta) * z - (beta / beta_prev) * z_prev
        w_next = m.apply(np.conj(z_next)) if complex_symmetric else m.apply(z_next)
        if buffer is not None:
            z_next, w_next = buffer.apply(z_next, w_next)
        beta_next = _beta_from(z_next, w_next, complex_symmetric,
                               scale_floor=beta1 * beta1)

        delta2 = (np.conj(c) if complex_symmetric else c) * delta + s * alpha
        gamma_pre = s * delta - c * alpha
        eps_cur = eps_next
        eps_next = s * beta_next
        delta = -c * beta_next
        gamma2 = np.sqrt(abs(gamma_pre) ** 2 + beta_next**2)

        # reduced-space ||A~ r~_{t-1}|| estimate, see SolveOptions
        arnorm_prev = phi * np.hypot(abs(gamma_pre), abs(delta))
        if t == 1:
            arnorm0 = arnorm_prev
        ls_converged = (opts.normal_residual_target is not None and t > 1
                        and arnorm_prev <= opts.normal_residual_target * arnorm0)

        if gamma2 <= eps_z * (abs(alpha) + beta + beta_next):
            g = t
            termination = TERM_GAMMA_ZERO
            if trace is not None:
                _precord(trace, x, rhat, rbrev, z, w, phi, alpha, beta_next,
                         gamma_pre, 0.0, 0.0, 1.0, 0.0, delta2, d1)
            break

        c = gamma_pre / gamma2
        s = beta_next / gamma2
        cc = np.conj(c) if complex_symmetric else c
        tau = cc * phi
        phi = s * phi
        dvec = (w / beta - delta2 * d1 - eps_cur * d2) / gamma2
        d2 = d1
        d1 = dvec
        x = x + tau * dvec

        if beta_next <= eps_z * beta1:
            g = t
            termination = TERM_BETA_ZERO
            rhat = zeros.copy()
            rbrev = zeros.copy()
            if trace is not None:
                _precord(trace, x, rhat, rbrev, z, w, phi, alpha, beta_next,
                         gamma_pre, gamma2, c, s, tau, delta2, dvec)
            break

        rbrev = (s * s) * rbrev - (phi * cc / beta_next) * z_next
        rhat = (s * s) * rhat - (phi * cc / beta_next) * (
            np.conj(w_next) if complex_symmetric else w_next)
        if trace is not None:
            _precord(trace, x, rhat, rbrev, z, w, phi, alpha, beta_next,
                     gamma_pre, gamma2, c, s, tau, delta2, dvec)
        if ls_converged:
            # grade reached in floating point (see SolveOptions)
            g = t
            termination = TERM_GAMMA_ZERO
            break
        z_prev = z
        z = z_next
        w = w_next
        beta_prev = beta
        beta = beta_next
        if buffer is not None:
            buffer.push(z / beta, w / beta)

        if opts.residual_target is not None and phi <= opts.residual_target * beta1:
            termination = TERM_RESIDUAL_TARGET
            break

    return SolveReport(x=x, r=None, phi=float(phi), norm_b=norm_b,
                       termination=termination, iterations=t, grade=g,
                       kind=kind, preconditioned=True, r_hat=rhat,
                       r_breve=rbrev, trace=trace, beta1=beta1)


def _precord(trace, x, rhat, rbrev, z, w, phi, alpha, beta_next, gamma_pre,
             gamma2, c, s, tau, delta2, dvec):
    trace.iterates.append(x.copy())
    trace.rhats.append(rhat.copy())
    trace.rbreves.append(rbrev.copy())
    trace.zs.append(z.copy())
    trace.ws.append(w.copy())
    trace.phis.append(float(phi))
    trace.alphas.append(complex(alpha))
    trace.betas.append(float(beta_next))
    trace.gammas_pre.append(complex(gamma_pre))
    trace.gammas2.append(float(gamma2))
    trace.cs.append(complex(c))
    trace.ss.append(float(s))
    trace.taus.append(complex(tau))
    trace.deltas2.append(complex(delta2))
    trace.directions.append(dvec.copy())


def plift(report: SolveReport, kind: str | None = None,
          eps_zero: float = 1e-12) -> np.ndarray:
    """Lifting for a preconditioned solve: removes the residual-proxy
    component from the final iterate, yielding S [S^H A S]^+ S^H b at the
    final iteration (the pseudo-inverse solution of the reduced problem).

    Hermitian: x - (<r_breve, x> / <r_hat, r_breve>) r_hat; the
    complex-symmetric form conjugates both proxies.  A zero r_hat returns
    x unchanged.
    """
    if not report.preconditioned or report.r_hat is None or report.r_breve is None:
        raise ValueError("plift needs a preconditioned solve report with "
                         "r_hat and r_breve populated")
    kind = kind or report.kind
    x = report.x
    if norm(report.r_hat) == 0.0:
        return x.copy()
    if kind == COMPLEX_SYMMETRIC:
        rh = np.conj(report.r_hat)
        rb = np.conj(report.r_breve)
    else:
        rh = report.r_hat
        rb = report.r_breve
    denom = np.vdot(rh, rb)
    if abs(denom) <= eps_zero * norm(rh) * norm(rb):
        raise ValueError("degenerate lifting denominator")
    return x - (np.vdot(rb, x) / denom) * rh


def subsolve(a: LinearOperator, s: SubOperator, b,
             opts: SolveOptions | None = None,
             kind: str | None = None) -> SolveReport:
    """Reduced solve for M = S S^H: runs plain MINRES on the composed
    operator S^H A S (S^T A S in the complex-symmetric path) and maps the
    iterate and residual back to the full space.

    The returned report carries x = S x~, r_hat = S r~ (conj(S) r~ for the
    complex-symmetric kind) and the true residual b - A x as both ``r`` and
    ``r_breve``, so ``plift`` applies to it unchanged; the reduced-space
    report is attached as ``reduced``.
    """
    if a.dim != s.d:
        raise ValueError("operator and sub-preconditioner dimensions differ")
    kind = kind or a.kind
    b = as_vector(b, a.dim)
    if kind == HERMITIAN:
        at = CallableOperator(
            s.m, HERMITIAN, lambda xt: s.apply_adjoint(a.apply(s.apply(xt))))
        bt = s.apply_adjoint(b)
        red = solve(at, bt, opts)
        rhat = s.apply(red.r)
    elif kind == COMPLEX_SYMMETRIC:
        at = CallableOperator(
            s.m, COMPLEX_SYMMETRIC, lambda xt: s.apply_transpose(a.apply(s.apply(xt))))
        bt = s.apply_transpose(b)
        red = solve_cs(at, bt, opts)
        rhat = s.apply_conj(red.r)
    else:
        raise ValueError(f"subsolve supports hermitian/complex_symmetric, got {kind!r}")
    x = s.apply(red.x)
    r_true = b - a.apply(x)
    return SolveReport(x=x, r=r_true, phi=red.phi, norm_b=norm(b),
                       termination=red.termination, iterations=red.iterations,
                       grade=red.grade, kind=kind, preconditioned=True,
                       r_hat=rhat, r_breve=r_true, trace=None, reduced=red,
                       beta1=norm(bt))


def sublift(report: SolveReport, s: SubOperator) -> np.ndarray:
    """Lift a subsolve result through the reduced problem: S lift(x~, r~)."""
    red = report.reduced
    if red is None:
        raise ValueError("sublift needs a report produced by subsolve")
    if red.kind == COMPLEX_SYMMETRIC:
        return s.apply(lift_cs(red.x, red.r))
    return s.apply(lift(red.x, red.r))
