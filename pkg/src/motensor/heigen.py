"""Smallest H-eigenvalue estimation and certification.

For even ``m`` the smallest H-eigenvalue of a symmetric tensor is the minimum
of ``A x^m`` over the m-norm unit sphere.  ``lambda_min_estimate`` runs a
multistart local descent on that sphere; the result is an upper bound on the
true minimum, certified by its KKT residual and, on small instances, by the
brute-force scans in :mod:`motensor.oracle`.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, solve_triangular

from .errors import ConvergenceError
from .family import moler_factor, mo_tensor
from .supmo import inner_minimize
from .tensor import RankOneSum, eval_grad, eval_hess, eval_poly, m_norm

log = logging.getLogger(__name__)

DEFAULT_STARTS = 64
DEFAULT_SEED = 42
CERTIFY_TOL = 1e-8


@dataclass
class HEigenPair:
    lam: float
    x: np.ndarray
    kkt_residual: float
    starts_used: int = 1
    seed: int | None = None

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "x": [float(v) for v in self.x],
            "kkt_residual": self.kkt_residual,
            "starts_used": self.starts_used,
            "seed": self.seed,
        }


def kkt_residual(T: RankOneSum, lam: float, x) -> float:
    """``max |A x^{m-1} - lam x^{[m-1]}|``."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise ValueError("x must be nonzero")
    return float(np.max(np.abs(eval_grad(T, x) - lam * x ** (T.order - 1))))


def _normalize(x, m):
    return x / m_norm(x, m)


def _fix_sign(x):
    k = int(np.argmax(np.abs(x)))
    return -x if x[k] < 0 else x


def _rayleigh(T, x):
    return float(eval_poly(T, x)) / m_norm(x, T.order) ** T.order


def _local_descent(T: RankOneSum, x0, tol: float, max_iter: int):
    """Descent on ``R(x) = A x^m / ||x||_m^m`` with renormalization after each step.

    The step direction is the tangent-space Newton direction of ``R``, with
    the reduced Hessian's eigenvalues replaced by their absolute values
    (floored), so saddles are escaped and the step is always a descent
    direction; the raw gradient is used if backtracking fails on it.
    """
    m, n = T.order, T.dim
    x = _normalize(np.asarray(x0, dtype=float), m)
    lam = float(eval_poly(T, x))
    res = kkt_residual(T, lam, x)
    for it in range(max_iter):
        if res <= tol or n == 1:
            break
        ax = eval_grad(T, x)
        xm1 = x ** (m - 1)
        grad = m * (ax - lam * xm1)
        dq = m * xm1
        hess = m * (m - 1) * (eval_hess(T, x) - lam * np.diag(x ** (m - 2)))
        hess -= np.outer(grad, dq) + np.outer(dq, grad)
        Q = null_space(x[None, :])
        g_r = Q.T @ grad
        w, V = np.linalg.eigh(Q.T @ hess @ Q)
        floor = max(1e-14 * float(np.max(np.abs(w))), 1e-300)
        newton = -Q @ (V @ ((V.T @ g_r) / np.maximum(np.abs(w), floor)))
        moved = False
        for d in (newton, -grad):
            slope = float(grad @ d)
            if slope >= 0:
                continue
            slack = 8 * np.finfo(float).eps * max(1.0, abs(lam))
            t = 1.0
            while t > 1e-16:
                trial = x + t * d
                val = _rayleigh(T, trial)
                if val <= lam + 1e-4 * t * slope + slack:
                    moved = True
                    break
                t *= 0.5
            if moved:
                break
        if not moved:
            break
        x = _normalize(trial, m)
        lam = float(eval_poly(T, x))
        res = kkt_residual(T, lam, x)
    return lam, _fix_sign(x), res


def _start_points(T: RankOneSum, starts: int, seed: int, extra_starts):
    n = T.dim
    fixed = [np.eye(n)[0], np.ones(n)] + [np.asarray(s, dtype=float) for s in extra_starts]
    fixed = [s for s in fixed if np.any(s)][: max(starts, 1)]
    n_random = max(starts - len(fixed), 0)
    children = np.random.SeedSequence(seed).spawn(n_random)
    rand = [np.random.default_rng(c).standard_normal(n) for c in children]
    return fixed + rand


def lambda_min_estimate(
    T: RankOneSum,
    starts: int = DEFAULT_STARTS,
    seed: int = DEFAULT_SEED,
    extra_starts=(),
    tol: float = 1e-10,
    max_iter: int = 10_000,
    certify_tol: float = CERTIFY_TOL,
) -> HEigenPair:
    """Best local minimum of ``A x^m`` on the m-norm unit sphere over several starts.

    Deterministic starts ``e_1``, ``e`` and ``extra_starts`` come first; the
    rest are Gaussian directions, one per child of ``SeedSequence(seed)``.
    The minimum over runs whose KKT residual is within ``certify_tol`` is
    returned (ties broken by lexicographically smallest ``x``).
    """
    if T.order % 2:
        raise ValueError("smallest H-eigenvalue estimation needs even order")
    if starts < 1:
        raise ValueError("starts must be >= 1")
    points = _start_points(T, starts, seed, extra_starts)
    best = None
    fallback = None
    for x0 in points:
        lam, x, res = _local_descent(T, x0, tol, max_iter)
        key = (lam, tuple(x))
        if fallback is None or res < fallback[2]:
            fallback = (lam, x, res)
        if res <= certify_tol and (best is None or key < (best[0], tuple(best[1]))):
            best = (lam, x, res)
    if best is None:
        lam, x, res = fallback
        raise ConvergenceError(
            f"no run reached KKT residual {certify_tol}; best was {res:.3e}",
            best=HEigenPair(lam, x, res, len(points), seed),
        )
    lam, x, _ = best
    return HEigenPair(lam, x, kkt_residual(T, lam, x), len(points), seed)


def witness_upper_bound(z, m: int, alpha: float):
    """Test vector ``w_i = z_i - z_{i+1}``, ``w_n = z_n`` and its Rayleigh quotient on ``M - alpha N``."""
    z = np.asarray(z, dtype=float)
    w = z - np.append(z[1:], 0.0)
    if not np.any(w):
        raise ValueError("witness vector vanished")
    T = mo_tensor(len(z), m, alpha)
    return w, float(eval_poly(T, w)) / m_norm(w, m) ** m


@dataclass
class CurveRow:
    n: int
    lambda_min: float
    kkt_residual: float
    starts_used: int
    x: np.ndarray
    decreasing: bool | None = None


@dataclass
class LambdaMinCurve:
    m: int
    alpha: float
    seed: int
    rows: list[CurveRow] = field(default_factory=list)
    error: str | None = None

    @property
    def strictly_decreasing(self) -> bool:
        return all(r.decreasing is not False for r in self.rows)

    @property
    def all_positive(self) -> bool:
        return all(r.lambda_min > 0 for r in self.rows)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "alpha": self.alpha,
            "seed": self.seed,
            "strictly_decreasing": self.strictly_decreasing,
            "error": self.error,
            "rows": [
                {
                    "n": r.n,
                    "lambda_min": r.lambda_min,
                    "kkt_residual": r.kkt_residual,
                    "starts_used": r.starts_used,
                    "decreasing": r.decreasing,
                    "x": [float(v) for v in r.x],
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "lambda_min", "kkt_residual", "starts_used", "decreasing"])
        for r in self.rows:
            flag = "" if r.decreasing is None else int(r.decreasing)
            w.writerow([r.n, repr(r.lambda_min), repr(r.kkt_residual), r.starts_used, flag])
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def lambda_min_curve(
    m: int,
    alpha: float,
    n_from: int,
    n_to: int,
    starts: int = DEFAULT_STARTS,
    seed: int = DEFAULT_SEED,
    curve: LambdaMinCurve | None = None,
) -> LambdaMinCurve:
    """Smallest H-eigenvalue estimates of ``M(n,m) - alpha N(n,m)`` for ``n_from..n_to``.

    When ``1 <= alpha <= 2`` the inner-problem witness is added as a start.
    Pass ``curve`` to have rows appended in place, which keeps partial output
    if an estimate fails.
    """
    if m % 2:
        raise ValueError("m must be even")
    if n_from < 1 or n_to < n_from:
        raise ValueError("need 1 <= n_from <= n_to")
    curve = curve if curve is not None else LambdaMinCurve(m, float(alpha), seed)
    z = None
    for n in range(n_from, n_to + 1):
        T = mo_tensor(n, m, alpha)
        extra = []
        if 1.0 <= alpha <= 2.0 and n >= 2:
            z = inner_minimize(n, m, alpha - 1.0, z0=z).minimizer_z
            extra.append(witness_upper_bound(z, m, alpha)[0])
        pair = lambda_min_estimate(T, starts, seed, extra_starts=extra)
        prev = curve.rows[-1].lambda_min if curve.rows else None
        row = CurveRow(n, pair.lam, pair.kkt_residual, pair.starts_used, pair.x)
        if prev is not None:
            row.decreasing = pair.lam < prev
        curve.rows.append(row)
        log.info("n=%d lambda_min=%.6e kkt=%.2e", n, pair.lam, pair.kkt_residual)
    return curve


def moler_lambda_min(n: int, tol: float = 1e-15, max_iter: int = 500) -> float:
    """Smallest eigenvalue of the Moler matrix by inverse iteration with its ``L L^T`` factor."""
    if n < 1:
        raise ValueError("n must be >= 1")
    L = moler_factor(n).astype(float)
    v = np.ones(n) / np.sqrt(n)
    lam = np.inf
    for _ in range(max_iter):
        y = solve_triangular(L, v, lower=True, unit_diagonal=True)
        # v^T A^{-1} v = |L^{-1} v|^2
        new = 1.0 / float(y @ y)
        w = solve_triangular(L.T, y, lower=False, unit_diagonal=True)
        v = w / np.linalg.norm(w)
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    y = solve_triangular(L, v, lower=True, unit_diagonal=True)
    return 1.0 / float(y @ y)
