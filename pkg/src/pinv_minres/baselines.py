"""Reference solvers for the comparison experiments: LSQR (Golub-Kahan
bidiagonalization, two operator products per iteration) and truncated SVD.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .core import LinearOperator, as_vector, norm


@dataclass
class BaselineReport:
    x: np.ndarray
    residual_norm: float
    iterations: int
    retained_rank: int | None
    wall_time: float


def lsqr(a: LinearOperator, b, max_iter: int = 100) -> BaselineReport:
    """Standard LSQR with a fixed iteration budget; converges towards the
    minimum-norm least-squares solution for any operator providing an
    adjoint.

    Tolerance-based stopping is disabled for comparability across solvers;
    the only early exits are exact bidiagonalization breakdown and the
    machine-precision floor of the normal-equation residual ||A^H r||
    (iterating past that floor re-amplifies roundoff on singular systems).
    """
    b = as_vector(b, a.dim)
    t0 = time.perf_counter()
    x = np.zeros(a.dim, dtype=np.complex128)
    beta = norm(b)
    if beta == 0.0:
        return BaselineReport(x, 0.0, 0, None, time.perf_counter() - t0)
    u = b / beta
    v = a.apply_adjoint(u)
    alfa = norm(v)
    if alfa == 0.0:
        return BaselineReport(x, beta, 0, None, time.perf_counter() - t0)
    v = v / alfa
    w = v.copy()
    phibar = beta
    rhobar = alfa
    tiny = 1e-15 * beta
    arnorm_floor = 1e-12 * alfa * beta
    iters = 0
    for iters in range(1, max_iter + 1):
        u = a.apply(v) - alfa * u
        beta = norm(u)
        if beta > tiny:
            u = u / beta
            v_new = a.apply_adjoint(u) - beta * v
            alfa = norm(v_new)
            if alfa > tiny:
                v = v_new / alfa
        rho = np.sqrt(rhobar**2 + beta**2)
        c = rhobar / rho
        s = beta / rho
        theta = s * alfa
        rhobar = -c * alfa
        phi = c * phibar
        phibar = s * phibar
        x = x + (phi / rho) * w
        w = v - (theta / rho) * w
        arnorm = alfa * abs(s * phi)
        if beta <= tiny or alfa <= tiny or arnorm <= arnorm_floor:
            break
    return BaselineReport(x, float(phibar), iters, None,
                          time.perf_counter() - t0)


def tsvd_solve(a, b, rank: int | None = None,
               threshold: float | None = None) -> BaselineReport:
    """Truncated-SVD solution sum_k (u_k^H b / s_k) v_k over the retained
    singular triplets, selected by count (``rank``) or by relative singular
    value (``threshold``)."""
    a = np.asarray(a, dtype=np.complex128)
    b = as_vector(b, a.shape[0])
    if (rank is None) == (threshold is None):
        raise ValueError("pass exactly one of rank or threshold")
    t0 = time.perf_counter()
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    smax = s[0] if s.size else 0.0
    numerical = int(np.count_nonzero(s > 1e-12 * smax)) if smax > 0 else 0
    if rank is not None:
        if rank < 0:
            raise ValueError("rank must be nonnegative")
        if rank > numerical:
            warnings.warn(f"requested rank {rank} exceeds numerical rank "
                          f"{numerical}; clamping", stacklevel=2)
            rank = numerical
        k = rank
    else:
        k = int(np.count_nonzero(s >= threshold * smax)) if smax > 0 else 0
    if k == 0:
        x = np.zeros(a.shape[1], dtype=np.complex128)
    else:
        x = vh[:k].conj().T @ ((u[:, :k].conj().T @ b) / s[:k])
    return BaselineReport(x, float(np.linalg.norm(b - a @ x)), 0, k,
                          time.perf_counter() - t0)


def tsvd_solve_kronecker(z, bmat, rank_pairs: int | None = None,
                         threshold: float | None = None) -> BaselineReport:
    """Truncated SVD for A = Z (x) Z without forming A: the singular pairs
    of A are products of eigenvalue pairs of the symmetric factor Z.

    ``bmat`` is the right-hand side as an n x n array; ``rank_pairs`` counts
    retained (i, j) pairs, ordered by |lambda_i lambda_j| descending.
    """
    z = np.asarray(z, dtype=np.float64)
    bmat = np.asarray(bmat, dtype=np.float64)
    n = z.shape[0]
    t0 = time.perf_counter()
    lam, q = np.linalg.eigh(z)
    prod = np.abs(np.outer(lam, lam))
    smax = prod.max()
    if rank_pairs is not None:
        order = np.argsort(prod, axis=None)[::-1]
        keep = np.zeros_like(prod, dtype=bool)
        keep[np.unravel_index(order[:rank_pairs], prod.shape)] = True
        k = int(rank_pairs)
    else:
        keep = prod >= threshold * smax
        k = int(keep.sum())
    bt = q.T @ bmat @ q
    xt = np.where(keep, bt / np.where(keep, np.outer(lam, lam), 1.0), 0.0)
    x = q @ xt @ q.T
    resid = float(np.linalg.norm(z @ x @ z - bmat))
    return BaselineReport(x.reshape(-1).astype(np.complex128), resid, 0, k,
                          time.perf_counter() - t0)
