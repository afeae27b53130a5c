"""Brute-force ground truth for small instances.

Nothing here uses the rank-one structure except through ``eval_poly`` and
``eval_grad`` for batched probing; ``dense_eval`` works on the full array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .heigen import HEigenPair, kkt_residual
from .tensor import DenseSymmetricTensor, RankOneSum, eval_grad, eval_poly


def _contract(arr: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Contract every axis of ``arr`` with each row of ``X``; returns shape ``(S,)``."""
    S, n = X.shape
    cur = (X @ arr.reshape(n, -1)).reshape(S, -1)
    for _ in range(arr.ndim - 1):
        cur = np.einsum("si,sij->sj", X, cur.reshape(S, n, -1))
    return cur[:, 0]


def dense_eval(T: DenseSymmetricTensor, x, budget=None):
    """Full ``n^m`` contraction ``sum a_{i1..im} x_{i1} ... x_{im}``."""
    x = np.asarray(x, dtype=float)
    arr = T.to_array(budget).astype(float)
    if x.shape[-1] != T.dim:
        raise ValueError(f"expected vector(s) of length {T.dim}")
    X = np.atleast_2d(x)
    out = _contract(arr, X.reshape(-1, T.dim))
    return out[0] if x.ndim == 1 else out.reshape(x.shape[:-1])


def _batch_eval(T, X, budget=None):
    if isinstance(T, RankOneSum):
        return eval_poly(T, X)
    return _contract(T.to_array(budget).astype(float), X)


def _normalize_rows(X, m):
    norms = np.sum(np.abs(X) ** m, axis=1) ** (1.0 / m)
    return X / norms[:, None]


def _angular_grid(n, grid_dims):
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        th = np.linspace(0.0, np.pi, grid_dims, endpoint=False)
        return np.column_stack([np.cos(th), np.sin(th)])
    th = np.linspace(0.0, np.pi, grid_dims)
    ph = np.linspace(0.0, 2 * np.pi, 2 * grid_dims, endpoint=False)
    T, P = np.meshgrid(th, ph, indexing="ij")
    return np.column_stack([(np.sin(T) * np.cos(P)).ravel(), (np.sin(T) * np.sin(P)).ravel(), np.cos(T).ravel()])


@dataclass
class PsdScanResult:
    value: float
    x: np.ndarray
    evaluated: int

    @property
    def disproves_psd(self) -> bool:
        return self.value < 0

    def to_json(self) -> dict:
        return {
            "min_value": self.value,
            "x": [float(v) for v in self.x],
            "evaluated": self.evaluated,
            "disproves_psd": self.disproves_psd,
        }


def psd_scan(T, samples: int = 20000, seed: int = 42, grid_dims: int = 181, candidates=(), budget=None) -> PsdScanResult:
    """Minimum of ``A x^m`` over sampled m-norm unit vectors.

    Samples are uniform on the Euclidean sphere, then rescaled to unit
    m-norm.  For ``n <= 3`` an angular grid is added; ``candidates`` are
    extra vectors to probe.  A negative value disproves PSD, a nonnegative
    one is only evidence.
    """
    m, n = T.order, T.dim
    if m % 2:
        raise ValueError("PSD probing needs even order")
    rng = np.random.default_rng(seed)
    parts = [rng.standard_normal((samples, n))]
    if n <= 3:
        parts.append(_angular_grid(n, grid_dims))
    cand = [np.asarray(c, dtype=float).reshape(1, n) for c in candidates]
    parts.extend(cand)
    X = np.vstack(parts)
    X = X[np.any(X != 0, axis=1)]
    X = _normalize_rows(X, m)
    vals = _batch_eval(T, X, budget)
    k = int(np.argmin(vals))
    return PsdScanResult(float(vals[k]), X[k], len(X))


@dataclass
class ScanReport:
    pairs: list[HEigenPair]
    grid_size: int
    refined_tolerance: float
    warnings: list[str] = field(default_factory=list)

    @property
    def smallest(self) -> HEigenPair:
        return self.pairs[0]

    @property
    def lambdas(self) -> list[float]:
        return [p.lam for p in self.pairs]

    def to_json(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "refined_tolerance": self.refined_tolerance,
            "warnings": self.warnings,
            "pairs": [
                {"lambda": p.lam, "x": [float(v) for v in p.x], "kkt_residual": p.kkt_residual}
                for p in self.pairs
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _residual_fn(T, flip):
    m = T.order

    def r(t):
        t = np.asarray(t, dtype=float)
        X = np.column_stack([np.ones_like(t), t])
        if flip:
            X = X[:, ::-1]
        G = eval_grad(T, X)
        a, b = (G[:, 1], G[:, 0]) if flip else (G[:, 0], G[:, 1])
        # x = (1, t): r = G_2 - t^{m-1} G_1 ; flipped x = (t, 1): r = G_1 - t^{m-1} G_2
        return b - t ** (m - 1) * a

    return r


def _bisect(r, lo, hi, rlo, xtol):
    while hi - lo > xtol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        rm = r(np.array([mid]))[0]
        if rm == 0.0:
            return mid
        if np.sign(rm) == np.sign(rlo):
            lo, rlo = mid, rm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _roots(r, grid, xtol, warnings, label, m):
    vals = r(grid)
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0 or scale < 1e-300:
        return None
    roots = list(grid[vals == 0.0])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    for i in idx:
        roots.append(_bisect(r, grid[i], grid[i + 1], vals[i], xtol))
    # residual has degree 2m-2 in the slope parameter; compare on a scaled copy
    a = np.abs(vals) / (1.0 + np.abs(grid)) ** (2 * m - 2)
    scale = float(np.max(a))
    # local minimum of |r| without a sign change: possible unresolved root pair
    for i in range(1, len(grid) - 1):
        if (
            a[i] < a[i - 1]
            and a[i] < a[i + 1]
            and np.sign(vals[i - 1]) == np.sign(vals[i]) == np.sign(vals[i + 1])
            and a[i] < 1e-6 * scale
        ):
            warnings.append(f"{label}: possible unresolved roots near {grid[i]:.6g}")
    return roots


def h_eigen_scan_2d(T: RankOneSum, grid: int = 4096, t_max: float = 50.0, xtol: float = 1e-13,
                    refined_tolerance: float = 1e-10) -> ScanReport:
    """All real H-eigenpairs of a 2-dimensional even-order tensor, up to grid resolution.

    Directions ``x = (1, t)`` with ``|t| <= t_max`` and ``x = (s, 1)`` with
    ``|s| <= 1/t_max`` (which includes ``(0, 1)``) are scanned for sign
    changes of the eigen-equation residual; roots are refined by bisection.
    """
    if T.dim != 2:
        raise ValueError("h_eigen_scan_2d needs dim == 2")
    m = T.order
    if m % 2:
        raise ValueError("h_eigen_scan_2d needs even order")
    warnings: list[str] = []
    t_grid = np.linspace(-t_max, t_max, grid)
    s_grid = np.linspace(-1.0 / t_max, 1.0 / t_max, max(grid // 8, 65))
    roots_t = _roots(_residual_fn(T, False), t_grid, xtol, warnings, "t-scan", m)
    roots_s = _roots(_residual_fn(T, True), s_grid, xtol, warnings, "s-scan", m)
    if roots_t is None or roots_s is None:
        # residual vanishes identically: every direction is an eigenvector
        warnings.append("eigen-equation residual vanishes identically; reporting sample directions")
        dirs = [np.array(v, dtype=float) for v in ((1, 0), (0, 1), (1, 1), (1, -1))]
    else:
        dirs = [np.array([1.0, t]) for t in roots_t] + [np.array([s, 1.0]) for s in roots_s]

    pairs: list[HEigenPair] = []
    for d in dirs:
        x = d / np.sum(np.abs(d) ** m) ** (1.0 / m)
        k = int(np.argmax(np.abs(x)))
        x = -x if x[k] < 0 else x
        lam = float(eval_grad(T, x)[k] / x[k] ** (m - 1))
        res = kkt_residual(T, lam, x)
        if res > refined_tolerance:
            warnings.append(f"root near x={x.tolist()} kept residual {res:.2e}")
            continue
        if any(np.max(np.abs(p.x - x)) < 1e-8 for p in pairs):
            continue
        pairs.append(HEigenPair(lam, x, res))
    pairs.sort(key=lambda p: (p.lam, tuple(p.x)))
    return ScanReport(pairs, len(t_grid) + len(s_grid), refined_tolerance, warnings)
