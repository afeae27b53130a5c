"""Inner convex problem, its fixed point in beta, and the Sup-MO value.

For ``z`` with ``z_1 = 1``::

    g(z, beta) = (1 + beta) * (sum_{i<n} (z_i - z_{i+1})^m + z_n^m) + sum_{i>=2} z_i^m
    f_n(beta)  = min_z g(z, beta)

``M - (1 + beta) N`` is PSD in dimension ``n`` iff ``f_n(beta) >= beta``.
The Sup-MO value is ``1 + beta*`` with ``beta*`` the fixed point of the
large-``n`` limit of ``f_n``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .errors import IterationLimitError, OuterBudgetError

log = logging.getLogger(__name__)

INNER_TOL = 1e-10
DEFAULT_EPS = 1e-4
DEFAULT_N_MAX = 4096
_EPS = np.finfo(float).eps


def _check_order(m):
    if m < 2 or m % 2:
        raise ValueError(f"m must be an even integer >= 2, got {m}")


def _check_z(z):
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size == 0 or z[0] != 1.0:
        raise ValueError("z must have z[0] == 1")
    return z


def _diffs(z):
    # d_i = z_i - z_{i+1} with z_{n+1} = 0, so d_n = z_n
    return z - np.append(z[1:], 0.0)


def g_value(z, beta: float, m: int) -> float:
    z = _check_z(z)
    _check_order(m)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return float((1.0 + beta) * np.sum(_diffs(z) ** m) + np.sum(z[1:] ** m))


def g_grad_hess(z, beta: float, m: int):
    """Gradient and tridiagonal Hessian of ``g`` with respect to ``z_2..z_n``.

    Returns ``(grad, diag, off)`` where ``off[j]`` couples free variables
    ``j`` and ``j + 1``.
    """
    z = _check_z(z)
    _check_order(m)
    c = 1.0 + beta
    d = _diffs(z)
    free = z[1:]
    grad = c * m * (d[1:] ** (m - 1) - d[:-1] ** (m - 1)) + m * free ** (m - 1)
    k = m * (m - 1)
    diag = c * k * (d[:-1] ** (m - 2) + d[1:] ** (m - 2)) + k * free ** (m - 2)
    off = -c * k * d[1:-1] ** (m - 2)
    return grad, diag, off


@dataclass
class InnerSolveResult:
    beta: float
    n: int
    m: int
    value: float
    minimizer_z: np.ndarray
    grad_norm: float
    iterations: int


def _start(n):
    return 0.5 ** np.arange(n)


def pad_start(z, n: int) -> np.ndarray:
    """Extend (or truncate) a minimizer to length ``n`` continuing its last geometric decay."""
    z = np.asarray(z, dtype=float)
    if len(z) >= n:
        return z[:n].copy()
    ratio = 0.5
    if len(z) >= 2 and z[-2] != 0.0:
        ratio = float(np.clip(z[-1] / z[-2], -1.0, 1.0))
    extra = z[-1] * ratio ** np.arange(1, n - len(z) + 1)
    return np.concatenate([z, extra])


def inner_minimize(n: int, m: int, beta: float, tol: float = INNER_TOL, z0=None, max_iter: int = 500):
    """Minimize ``g(., beta)`` over ``z_2..z_n`` by damped Newton.

    Each step solves the tridiagonal system ``(H + mu I) d = -grad`` with
    ``mu = max(1e-10, tol * |grad|)``, followed by Armijo backtracking; a
    gradient step is used when the Newton direction is unusable.
    """
    _check_order(m)
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        z = np.ones(1)
        return InnerSolveResult(beta, 1, m, g_value(z, beta, m), z, 0.0, 0)

    z = _start(n) if z0 is None else pad_start(z0, n)
    z[0] = 1.0
    val = g_value(z, beta, m)
    for it in range(max_iter + 1):
        grad, diag, off = g_grad_hess(z, beta, m)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            return InnerSolveResult(beta, n, m, val, z, gnorm, it)
        if it == max_iter:
            break
        mu = max(1e-10, tol * gnorm)
        ab = np.zeros((2, n - 1))
        ab[0, 1:] = off
        ab[1] = diag + mu
        try:
            if n == 2:
                step = -grad / ab[1]
            else:
                step = solveh_banded(ab, -grad, check_finite=False)
            slope = float(grad @ step)
        except (LinAlgError, ValueError):
            step, slope = None, 0.0
        if step is None or not np.all(np.isfinite(step)) or slope >= 0:
            step = -grad / max(1.0, float(np.max(diag)))
            slope = float(grad @ step)
        slack = 8 * _EPS * max(1.0, abs(val))
        t = 1.0
        while t > 1e-20:
            trial = z.copy()
            trial[1:] += t * step
            tv = g_value(trial, beta, m)
            if tv <= val + 1e-4 * t * slope + slack:
                break
            t *= 0.5
        else:
            # no decrease representable in double precision
            log.debug("inner line search stalled at |grad|=%g", gnorm)
            break
        z, val = trial, tv

    grad = g_grad_hess(z, beta, m)[0]
    best = InnerSolveResult(beta, n, m, val, z, float(np.linalg.norm(grad)), it)
    raise IterationLimitError(
        f"inner solve (n={n}, m={m}, beta={beta}) stopped with |grad|={best.grad_norm:.3e} > {tol}",
        best=best,
    )


def f_value(n: int, m: int, beta: float, tol: float = INNER_TOL, z0=None) -> float:
    return inner_minimize(n, m, beta, tol, z0).value


@dataclass
class FixedPointResult:
    beta: float
    f_value: float
    inner_iterations: int
    minimizer_z: np.ndarray
    evaluations: int


def solve_fixed_point(
    n: int,
    m: int,
    eps: float = DEFAULT_EPS,
    *,
    tol: float = INNER_TOL,
    xtol: float = 1e-13,
    z0=None,
    mode: str = "bisect",
    beta0: float = 1.0,
    max_steps: int = 200,
) -> FixedPointResult:
    """Solve ``f_n(beta) = beta`` on ``[0, 1]``.

    ``mode="bisect"`` keeps a sign bracket of ``h = f_n - beta`` and halves it
    down to ``xtol``.  ``mode="paper"`` applies the halving updates
    ``beta/2`` and ``(beta+1)/2`` literally and stops when ``|h| <= eps``;
    it has no bracket and may cycle, in which case ``IterationLimitError``
    is raised.
    """
    _check_order(m)
    if eps <= 0:
        raise ValueError("eps must be positive")
    iters = 0
    evals = 0
    z = z0

    def h(beta):
        nonlocal iters, evals, z
        res = inner_minimize(n, m, beta, tol, z)
        iters += res.iterations
        evals += 1
        z = res.minimizer_z
        return res.value - beta, res

    if mode == "paper":
        beta = beta0
        for _ in range(max_steps):
            hv, res = h(beta)
            if hv < -eps:
                beta = beta / 2
            elif hv > eps:
                beta = (beta + 1) / 2
            else:
                return FixedPointResult(beta, res.value, iters, res.minimizer_z, evals)
        raise IterationLimitError(
            f"literal halving update did not reach |f - beta| <= {eps} in {max_steps} steps (n={n}, m={m})",
            best=FixedPointResult(beta, res.value, iters, res.minimizer_z, evals),
        )
    if mode != "bisect":
        raise ValueError(f"unknown mode {mode!r}")

    h_hi, res_hi = h(1.0)
    if h_hi >= -eps:
        return FixedPointResult(1.0, res_hi.value, iters, res_hi.minimizer_z, evals)
    lo, hi = 0.0, 1.0
    best = res_hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        hv, res = h(mid)
        best = res
        if hv == 0.0:
            lo = hi = mid
            break
        if hv > 0:
            lo = mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    if beta != best.beta:
        _, best = h(beta)
    return FixedPointResult(beta, best.value, iters, best.minimizer_z, evals)


def fixed_point_beta(n: int, m: int, eps: float = DEFAULT_EPS, **kwargs) -> float:
    """Root of ``f_n(beta) - beta`` in ``[0, 1]``; ``1`` when ``f_n(1) >= 1 - eps``."""
    return solve_fixed_point(n, m, eps, **kwargs).beta


@dataclass
class StageRecord:
    n: int
    beta_n: float
    f_value: float
    inner_iterations: int


@dataclass
class BetaSolveTrace:
    m: int
    epsilon: float
    per_n: list[StageRecord] = field(default_factory=list)
    beta_star: float = float("nan")
    alpha_star: float = float("nan")
    converged: bool = False

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "epsilon": self.epsilon,
            "converged": self.converged,
            "beta_star": self.beta_star,
            "alpha_star": self.alpha_star,
            "per_n": [asdict(r) for r in self.per_n],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "beta_n", "f_value"])
        for r in self.per_n:
            w.writerow([r.n, repr(r.beta_n), repr(r.f_value)])
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def default_schedule(n_max: int = DEFAULT_N_MAX) -> list[int]:
    out, n = [], 2
    while n <= n_max:
        out.append(n)
        n *= 2
    return out


def alpha_star(
    m: int,
    eps: float = DEFAULT_EPS,
    n_schedule=None,
    *,
    n_max: int = DEFAULT_N_MAX,
    tol: float = INNER_TOL,
    mode: str = "bisect",
) -> BetaSolveTrace:
    """Sup-MO value ``1 + beta*`` by fixed points along a growing dimension schedule.

    Stops once two consecutive schedule points give fixed points closer than
    ``eps``.  Raises ``OuterBudgetError`` (with the partial trace) when the
    schedule is exhausted first.
    """
    _check_order(m)
    if eps <= 0:
        raise ValueError("eps must be positive")
    schedule = list(n_schedule) if n_schedule is not None else default_schedule(n_max)
    trace = BetaSolveTrace(m=m, epsilon=eps)
    z = None
    beta_prev = 1.0
    for n in schedule:
        res = solve_fixed_point(n, m, eps, tol=tol, z0=z, mode=mode, beta0=beta_prev)
        trace.per_n.append(StageRecord(n, res.beta, res.f_value, res.inner_iterations))
        log.info("m=%d n=%d beta_n=%.12g", m, n, res.beta)
        trace.beta_star = res.beta
        trace.alpha_star = 1.0 + res.beta
        z = res.minimizer_z
        if len(trace.per_n) >= 2 and abs(res.beta - beta_prev) < eps:
            trace.converged = True
            return trace
        beta_prev = res.beta
    raise OuterBudgetError(
        f"schedule exhausted at n={schedule[-1] if schedule else 0} before |beta_n - beta_prev| < {eps}",
        trace=trace,
    )


@dataclass
class ProbeTable:
    m: int
    rows: list[tuple[int, float, float]]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def value(self, n, beta):
        for rn, rb, rv in self.rows:
            if rn == n and rb == beta:
                return rv
        raise KeyError((n, beta))


def f_monotonicity_probe(m: int, beta_grid, n_max: int, n_min: int = 1, atol: float = 1e-9) -> ProbeTable:
    """Tabulate ``f_n(beta)`` and flag breaks of monotonicity in ``n`` and ``beta``.

    ``f_n`` should be nonincreasing in ``n`` and nondecreasing in ``beta``.
    """
    _check_order(m)
    betas = sorted(float(b) for b in beta_grid)
    if any(not 0 <= b <= 1 for b in betas):
        raise ValueError("beta grid must lie in [0, 1]")
    rows = []
    table = {}
    for b in betas:
        z = None
        for n in range(n_min, n_max + 1):
            res = inner_minimize(n, m, b, z0=z)
            z = res.minimizer_z
            table[n, b] = res.value
            rows.append((n, b, res.value))
    violations = []
    for b in betas:
        for n in range(n_min, n_max):
            if table[n + 1, b] > table[n, b] + atol:
                violations.append(f"f_{n + 1}({b}) = {table[n + 1, b]!r} > f_{n}({b}) = {table[n, b]!r}")
    for n in range(n_min, n_max + 1):
        for b1, b2 in zip(betas, betas[1:]):
            if table[n, b1] > table[n, b2] + atol:
                violations.append(f"f_{n}({b1}) = {table[n, b1]!r} > f_{n}({b2}) = {table[n, b2]!r}")
    return ProbeTable(m, rows, violations)
