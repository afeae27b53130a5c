"""Symmetric tensors as weighted rank-one sums and as compressed dense arrays.

A ``RankOneSum`` stores ``sum_k w_k u_k^{(x)m}`` and evaluates the associated
homogeneous polynomial in O(r n).  A ``DenseSymmetricTensor`` stores one value
per sorted multi-index (one per permutation class) and is used as ground truth
on small instances.
"""

from __future__ import annotations

import enum
import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, SizeBudgetError

DEFAULT_BUDGET = 10**7
BUDGET_ENV = "MOTENSOR_BUDGET"


def entry_budget(budget=None) -> int:
    """Logical-entry budget for dense tensors (``MOTENSOR_BUDGET`` overrides)."""
    if budget is not None:
        return int(budget)
    env = os.environ.get(BUDGET_ENV)
    if env:
        return int(float(env))
    return DEFAULT_BUDGET


def check_budget(dim: int, order: int, budget=None) -> None:
    limit = entry_budget(budget)
    if dim**order > limit:
        raise SizeBudgetError(
            f"dense tensor with n={dim}, m={order} has {dim**order} logical "
            f"entries, budget is {limit}"
        )


def _is_integral(a: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(a)) and np.all(a == np.round(a)))


def _readonly(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class RankOneSum:
    """Weighted sum of symmetric rank-one terms ``sum_k w_k u_k^m``.

    ``weights`` has shape ``(r,)`` and ``vectors`` shape ``(r, dim)``.
    """

    order: int
    dim: int
    weights: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if self.order < 1 or self.dim < 1:
            raise ValueError("order and dim must be positive")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        u = np.asarray(self.vectors, dtype=float)
        if u.size == 0:
            u = u.reshape(0, self.dim)
        if u.ndim != 2 or u.shape[1] != self.dim:
            raise DimensionError(
                f"term vectors must have length {self.dim}, got shape {u.shape}"
            )
        if u.shape[0] != w.shape[0]:
            raise DimensionError("one weight per term vector is required")
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "vectors", _readonly(u))

    @classmethod
    def from_terms(cls, order: int, dim: int, terms: Iterable[tuple[float, Sequence[float]]]):
        terms = list(terms)
        w = [t[0] for t in terms]
        u = np.array([np.asarray(t[1], dtype=float) for t in terms]).reshape(len(terms), dim)
        return cls(order, dim, np.array(w, dtype=float), u)

    @property
    def terms(self) -> list[tuple[float, np.ndarray]]:
        return [(float(w), u) for w, u in zip(self.weights, self.vectors)]

    @property
    def is_integral(self) -> bool:
        return _is_integral(self.weights) and _is_integral(self.vectors)

    def __len__(self):
        return len(self.weights)

    def scaled(self, c: float) -> "RankOneSum":
        return RankOneSum(self.order, self.dim, c * self.weights, self.vectors)

    def __add__(self, other: "RankOneSum") -> "RankOneSum":
        if (self.order, self.dim) != (other.order, other.dim):
            raise DimensionError("cannot add tensors of different shape")
        return RankOneSum(
            self.order,
            self.dim,
            np.concatenate([self.weights, other.weights]),
            np.vstack([self.vectors, other.vectors]),
        )

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "dim": self.dim,
            "terms": [
                {"weight": float(w), "vector": [float(v) for v in u]}
                for w, u in zip(self.weights, self.vectors)
            ],
        }


def _check_x(T: RankOneSum, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (T.dim,):
        raise DimensionError(f"expected vector(s) of length {T.dim}, got shape {x.shape}")
    return x


def eval_poly(T: RankOneSum, x, exact: bool = False):
    """Evaluate ``A x^m = sum_k w_k (u_k . x)^m``.

    ``x`` may be a single vector or a batch with trailing axis ``dim``.  With
    ``exact=True`` the sum is carried out in rational arithmetic (weights and
    vectors are converted exactly from their float values; ``x`` may hold
    ``Fraction`` or ``int`` entries).
    """
    if exact:
        if len(x) != T.dim:
            raise DimensionError(f"expected a vector of length {T.dim}")
        xs = [Fraction(v) for v in x]
        total = Fraction(0)
        for w, u in zip(T.weights, T.vectors):
            dot = sum((Fraction(float(ui)) * xi for ui, xi in zip(u, xs)), Fraction(0))
            total += Fraction(float(w)) * dot**T.order
        return total
    x = _check_x(T, x)
    proj = x @ T.vectors.T
    return proj**T.order @ T.weights


def eval_grad(T: RankOneSum, x) -> np.ndarray:
    """Return the vector ``A x^{m-1}``, i.e. ``(1/m) grad(A x^m)``."""
    x = _check_x(T, x)
    proj = x @ T.vectors.T
    return (proj ** (T.order - 1) * T.weights) @ T.vectors


def eval_hess(T: RankOneSum, x) -> np.ndarray:
    """Return the matrix ``A x^{m-2}``, i.e. ``grad^2(A x^m) / (m (m-1))``."""
    x = _check_x(T, x)
    if x.ndim != 1:
        raise DimensionError("eval_hess takes a single vector")
    proj = T.vectors @ x
    c = proj ** (T.order - 2) * T.weights if T.order >= 2 else np.zeros_like(proj)
    return (T.vectors.T * c) @ T.vectors


def m_norm(x, m: int) -> float:
    """``(sum |x_i|^m)^(1/m)``."""
    if m < 1:
        raise ValueError("m must be positive")
    x = np.asarray(x, dtype=float)
    scale = np.max(np.abs(x)) if x.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(scale * np.sum(np.abs(x / scale) ** m) ** (1.0 / m))


def sorted_indices(dim: int, order: int) -> np.ndarray:
    """All nondecreasing multi-indices (0-based) in lexicographic order."""
    reps = list(itertools.combinations_with_replacement(range(dim), order))
    return np.array(reps, dtype=np.int64).reshape(len(reps), order)


def multiplicity(index: Sequence[int]) -> int:
    """Number of distinct permutations of a multi-index."""
    counts = np.unique(np.asarray(index), return_counts=True)[1]
    out = math.factorial(len(index))
    for c in counts:
        out //= math.factorial(int(c))
    return out


def _keys(idx: np.ndarray, dim: int) -> np.ndarray:
    # mixed-radix key of a sorted index row; unique per permutation class
    weights = dim ** np.arange(idx.shape[-1], dtype=np.int64)
    return idx @ weights


@dataclass(frozen=True, eq=False)
class DenseSymmetricTensor:
    """Permutation-symmetric tensor stored by sorted representative index.

    Indices are 0-based.  ``values[j]`` is the common value of every
    permutation of ``reps[j]``.
    """

    order: int
    dim: int
    values: np.ndarray
    reps: np.ndarray = field(default=None)

    def __post_init__(self):
        reps = self.reps if self.reps is not None else sorted_indices(self.dim, self.order)
        reps = np.asarray(reps, dtype=np.int64)
        values = np.asarray(self.values)
        if values.shape != (reps.shape[0],):
            raise DimensionError("one value per sorted index is required")
        object.__setattr__(self, "reps", _readonly(reps))
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "_lookup", {tuple(r): j for j, r in enumerate(reps.tolist())})

    @classmethod
    def from_function(cls, dim: int, order: int, fn):
        """Build from ``fn(reps) -> values`` evaluated on the (C, m) index array."""
        reps = sorted_indices(dim, order)
        return cls(order, dim, np.asarray(fn(reps)), reps)

    @classmethod
    def from_array(cls, arr, atol: float = 0.0):
        arr = np.asarray(arr)
        order, dim = arr.ndim, arr.shape[0]
        if any(s != dim for s in arr.shape):
            raise DimensionError("array must be hypercubic")
        for perm in itertools.permutations(range(order)):
            if np.max(np.abs(arr - np.transpose(arr, perm)), initial=0) > atol:
                raise ValueError("array is not permutation-symmetric")
        reps = sorted_indices(dim, order)
        return cls(order, dim, arr[tuple(reps.T)], reps)

    @property
    def n_logical(self) -> int:
        return self.dim**self.order

    def entry(self, index: Sequence[int]):
        if len(index) != self.order or any(not 0 <= i < self.dim for i in index):
            raise DimensionError(f"index {tuple(index)} out of range")
        return self.values[self._lookup[tuple(sorted(index))]]

    def __getitem__(self, index):
        return self.entry(index)

    def to_array(self, budget=None) -> np.ndarray:
        """Expand to the full ``dim**order`` array."""
        check_budget(self.dim, self.order, budget)
        full = np.indices((self.dim,) * self.order).reshape(self.order, -1).T
        keys = _keys(np.sort(full, axis=1), self.dim)
        rep_keys = _keys(self.reps, self.dim)
        perm = np.argsort(rep_keys)
        pos = perm[np.searchsorted(rep_keys, keys, sorter=perm)]
        return self.values[pos].reshape((self.dim,) * self.order)

    def max_abs_diff(self, other: "DenseSymmetricTensor"):
        if (self.order, self.dim) != (other.order, other.dim):
            raise DimensionError("shape mismatch")
        other_vals = np.array([other.entry(tuple(r)) for r in self.reps])
        return np.max(np.abs(self.values - other_vals), initial=0)

    def to_json(self) -> dict:
        """Export over sorted representatives with 1-based indices."""
        integral = np.issubdtype(self.values.dtype, np.integer)
        return {
            "order": self.order,
            "dim": self.dim,
            "entries": [
                {"index": [int(i) + 1 for i in r], "value": int(v) if integral else float(v)}
                for r, v in zip(self.reps, self.values)
            ],
        }

    @classmethod
    def from_json(cls, data: dict):
        order, dim = int(data["order"]), int(data["dim"])
        vals = {
            tuple(sorted(i - 1 for i in e["index"])): e["value"] for e in data["entries"]
        }
        reps = sorted_indices(dim, order)
        values = np.array([vals.get(tuple(r), 0) for r in reps.tolist()])
        return cls(order, dim, values, reps)


def materialize(T: RankOneSum, budget=None) -> DenseSymmetricTensor:
    """Dense form of a rank-one sum; integer dtype when all terms are integral."""
    check_budget(T.dim, T.order, budget)
    reps = sorted_indices(T.dim, T.order)
    if T.is_integral:
        w = T.weights.astype(np.int64)
        u = T.vectors.astype(np.int64)
    else:
        w, u = T.weights, T.vectors
    if len(w) == 0:
        values = np.zeros(len(reps), dtype=w.dtype)
    else:
        # (r, C, m) gathered components, product over the index positions
        values = np.prod(u[:, reps], axis=2).T @ w
    return DenseSymmetricTensor(T.order, T.dim, values, reps)


class FamilyKind(str, enum.Enum):
    MOLER = "moler"
    M = "M"
    N = "N"
    MO = "MO"
    ESSENTIAL = "essential"


@dataclass(frozen=True)
class FamilySpec:
    """Symbolic descriptor of a member of the MO family."""

    kind: FamilyKind
    dim: int
    order: int = 2
    alpha: float | None = None

    def __post_init__(self):
        kind = FamilyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if kind is FamilyKind.MOLER and self.order != 2:
            raise ValueError("the Moler matrix has order 2")
        if kind is FamilyKind.MO:
            if self.alpha is None:
                raise ValueError("MO family requires alpha")
        elif self.alpha is not None:
            raise ValueError(f"alpha is only meaningful for kind MO, not {kind.value}")

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "n": self.dim, "m": self.order}
        if self.alpha is not None:
            out["alpha"] = float(self.alpha)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "FamilySpec":
        return cls(FamilyKind(data["kind"]), int(data["n"]), int(data["m"]), data.get("alpha"))
