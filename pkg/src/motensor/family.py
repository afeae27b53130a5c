"""Moler matrix, M/N base tensors, MO(alpha) tensors and CP certificates.

``entry`` and ``definition_entries`` implement the entrywise definitions and
are the reference every rank-one identity is checked against.  Family
indices in this module are 1-based, as in the mathematical definitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SizeBudgetError
from .tensor import (
    DenseSymmetricTensor,
    FamilyKind,
    FamilySpec,
    RankOneSum,
    check_budget,
    eval_poly,
    materialize,
)


def unit(n: int, i: int) -> np.ndarray:
    """``e_i`` (1-based)."""
    v = np.zeros(n)
    v[i - 1] = 1.0
    return v


def tail(n: int, i: int) -> np.ndarray:
    """``r_i``: ones in positions ``j >= i`` (1-based)."""
    v = np.zeros(n)
    v[i - 1 :] = 1.0
    return v


def moler_matrix(n: int) -> DenseSymmetricTensor:
    """Moler matrix: ``i`` on the diagonal, ``min(i, j) - 2`` off it."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return definition_dense(FamilySpec(FamilyKind.MOLER, n, 2))


def moler_factor(n: int) -> np.ndarray:
    """Unit lower-triangular ``L`` with ``-1`` below the diagonal; ``L L^T`` is the Moler matrix."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.eye(n, dtype=np.int64) - np.tril(np.ones((n, n), dtype=np.int64), -1)


def definition_entries(spec: FamilySpec, reps: np.ndarray) -> np.ndarray:
    """Entrywise definition on a ``(C, m)`` array of 1-based indices."""
    reps = np.asarray(reps, dtype=np.int64)
    if reps.ndim != 2 or reps.shape[1] != spec.order:
        raise DimensionError(f"indices must have length {spec.order}")
    if np.any(reps < 1) or np.any(reps > spec.dim):
        raise DimensionError(f"index components must lie in 1..{spec.dim}")
    diag = np.all(reps == reps[:, :1], axis=1)
    lo = reps.min(axis=1)
    first = reps[:, 0]
    kind = spec.kind
    if kind is FamilyKind.M:
        return np.where(diag, first, lo)
    if kind is FamilyKind.N:
        return np.where(diag, 0, 1)
    if kind is FamilyKind.ESSENTIAL:
        return np.where(diag, first, lo - 1)
    if kind is FamilyKind.MOLER:
        return np.where(diag, first, lo - 2)
    alpha = float(spec.alpha)
    return np.where(diag, first.astype(float), lo - alpha)


def entry(spec: FamilySpec, index):
    """Value of the family tensor at a 1-based multi-index."""
    out = definition_entries(spec, np.asarray(index).reshape(1, -1))[0]
    return out.item()


def definition_dense(spec: FamilySpec, budget=None) -> DenseSymmetricTensor:
    """Dense tensor built directly from the entrywise definition."""
    check_budget(spec.dim, spec.order, budget)
    return DenseSymmetricTensor.from_function(
        spec.dim, spec.order, lambda reps: definition_entries(spec, reps + 1)
    )


def _drop_zero(order, n, weights, vectors) -> RankOneSum:
    keep = [k for k, w in enumerate(weights) if w != 0]
    return RankOneSum(
        order, n, np.array([weights[k] for k in keep]), np.array([vectors[k] for k in keep]).reshape(len(keep), n)
    )


def mo_tensor(n: int, m: int, alpha: float) -> RankOneSum:
    """``M(n,m) - alpha N(n,m)`` as ``sum_{i>=2} r_i^m + (1-alpha) e^m + alpha sum_i e_i^m``.

    Valid for every real alpha; zero-weight terms are dropped, so alpha=1
    gives exactly the essential MO decomposition.
    """
    if n < 1 or m < 2:
        raise ValueError("need n >= 1 and m >= 2")
    weights = [1.0] * (n - 1) + [1.0 - alpha] + [float(alpha)] * n
    vectors = [tail(n, i) for i in range(2, n + 1)] + [np.ones(n)] + [unit(n, i) for i in range(1, n + 1)]
    return _drop_zero(m, n, weights, vectors)


def m_tensor(n: int, m: int) -> RankOneSum:
    """``M(n,m) = sum_{i>=2} r_i^m + e^m``."""
    return mo_tensor(n, m, 0.0)


def n_tensor(n: int, m: int) -> RankOneSum:
    """``N(n,m) = e^m - sum_i e_i^m``."""
    weights = [1.0] + [-1.0] * n
    vectors = [np.ones(n)] + [unit(n, i) for i in range(1, n + 1)]
    return RankOneSum(m, n, np.array(weights), np.array(vectors))


def structured(spec: FamilySpec) -> RankOneSum:
    """Rank-one form of any family member."""
    kind = spec.kind
    if kind is FamilyKind.M:
        return m_tensor(spec.dim, spec.order)
    if kind is FamilyKind.N:
        return n_tensor(spec.dim, spec.order)
    if kind is FamilyKind.ESSENTIAL:
        return mo_tensor(spec.dim, spec.order, 1.0)
    if kind is FamilyKind.MOLER:
        return mo_tensor(spec.dim, 2, 2.0)
    return mo_tensor(spec.dim, spec.order, float(spec.alpha))


@dataclass(frozen=True, eq=False)
class CpCertificate:
    """Nonnegative rank-one decomposition witnessing complete positivity of ``target``."""

    terms: RankOneSum
    target: FamilySpec

    def __post_init__(self):
        if np.any(self.terms.weights < 0) or np.any(self.terms.vectors < 0):
            raise ValueError("CP certificate terms must be nonnegative")
        if (self.terms.order, self.terms.dim) != (self.target.order, self.target.dim):
            raise DimensionError("certificate shape does not match its target")

    def __len__(self):
        return len(self.terms)

    def residual(self, budget=None):
        """``max |materialized certificate - definition|``; exact on integer instances."""
        return materialize(self.terms, budget).max_abs_diff(definition_dense(self.target, budget))

    def to_json(self) -> dict:
        return {"target": self.target.to_json(), "terms": self.terms.to_json()["terms"]}


def essential_certificate(n: int, m: int) -> CpCertificate:
    weights = [1.0] * (2 * n - 1)
    vectors = [unit(n, i) for i in range(1, n + 1)] + [tail(n, i) for i in range(2, n + 1)]
    return CpCertificate(
        RankOneSum(m, n, np.array(weights), np.array(vectors)),
        FamilySpec(FamilyKind.ESSENTIAL, n, m),
    )


def essential_mo(n: int, m: int, budget=None):
    """Essential MO tensor by definition, with its ``2n-1``-term CP certificate.

    Raises ``SizeBudgetError`` (carrying ``.certificate``) when the dense part
    would exceed the budget.
    """
    if n < 1 or m < 2:
        raise ValueError("need n >= 1 and m >= 2")
    cert = essential_certificate(n, m)
    try:
        dense = definition_dense(cert.target, budget)
    except SizeBudgetError as exc:
        raise SizeBudgetError(str(exc), certificate=cert) from None
    return dense, cert


def cp_certificate(n: int, m: int, alpha: float) -> CpCertificate | None:
    """Certificate for ``M - alpha N`` when ``alpha`` lies in ``[0, 1]``, else ``None``.

    ``None`` only means no certificate is claimed.
    """
    if not 0.0 <= alpha <= 1.0:
        return None
    if alpha == 1.0:
        return essential_certificate(n, m)
    weights = [1.0] * (n - 1) + [1.0 - alpha] + [float(alpha)] * n
    vectors = [tail(n, i) for i in range(2, n + 1)] + [np.ones(n)] + [unit(n, i) for i in range(1, n + 1)]
    terms = RankOneSum(m, n, np.array(weights), np.array(vectors))
    return CpCertificate(terms, FamilySpec(FamilyKind.MO, n, m, float(alpha)))


def sub_mo_witness_value(n: int, m: int, alpha: float) -> float:
    """``(M - alpha N) x^m`` at ``x = (1, -1, 0, ..., 0)``; equals ``1 + 2 alpha``."""
    if n < 2:
        raise DimensionError("the witness vector needs n >= 2")
    if m % 2:
        raise ValueError("the witness check needs even m")
    x = np.zeros(n)
    x[0], x[1] = 1.0, -1.0
    return float(eval_poly(mo_tensor(n, m, alpha), x))
