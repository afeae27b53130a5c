"""Identity checks bundled by ``motensor verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .family import (
    definition_dense,
    essential_mo,
    m_tensor,
    moler_factor,
    moler_matrix,
    mo_tensor,
    n_tensor,
    sub_mo_witness_value,
)
from .supmo import g_value
from .tensor import FamilyKind, FamilySpec, materialize


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_diff: float
    detail: str

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "max_diff": self.max_diff, "detail": self.detail}


def _check(name, diff, tol, detail):
    return CheckResult(name, bool(diff <= tol), float(diff), detail)


def check_cp_identity(n, m, fault=0.0):
    dense, cert = essential_mo(n, m)
    diff = materialize(cert.terms).max_abs_diff(dense) + fault
    nonneg = bool(np.all(cert.terms.weights >= 0) and np.all(cert.terms.vectors >= 0))
    res = _check("cp_identity", diff, 0.0, f"essential MO n={n} m={m}, {len(cert)} terms")
    res.passed = res.passed and nonneg and len(cert) == 2 * n - 1
    return res


def check_rank_one_forms(n, m, alphas=(-0.5, 0.0, 0.37, 1.0, 2.0)):
    diffs = [
        materialize(m_tensor(n, m)).max_abs_diff(definition_dense(FamilySpec(FamilyKind.M, n, m))),
        materialize(n_tensor(n, m)).max_abs_diff(definition_dense(FamilySpec(FamilyKind.N, n, m))),
    ]
    for a in alphas:
        spec = FamilySpec(FamilyKind.MO, n, m, a)
        diffs.append(materialize(mo_tensor(n, m, a)).max_abs_diff(definition_dense(spec)))
    return _check("rank_one_vs_entrywise", max(diffs), 1e-12, f"M, N and MO(alpha) for alpha in {list(alphas)}, n={n} m={m}")


def check_witness(n, m, alphas=(-1.0, -0.5, -0.2, 0.0, 0.5, 1.0)):
    n, m = max(n, 2), m if m % 2 == 0 else m + 1
    diff = max(abs(sub_mo_witness_value(n, m, a) - (1 + 2 * a)) for a in alphas)
    return _check("sub_mo_witness", diff, 1e-12, f"(M - aN)x^m = 1 + 2a at x=(1,-1,0,...), n={n} m={m}")


def check_moler(n_max=30):
    diff = 0
    for n in range(1, n_max + 1):
        L = moler_factor(n)
        A = moler_matrix(n)
        prod = L @ L.T
        ref = np.array([[A.entry((i, j)) for j in range(n)] for i in range(n)])
        diff = max(diff, int(np.max(np.abs(prod - ref))))
    return _check("moler_llt", diff, 0, f"L L^T equals the Moler matrix for n <= {n_max}")


def check_g_anchor(orders=(4, 6, 8)):
    diffs = []
    for m in orders:
        z = np.zeros(5)
        z[0], z[1] = 1.0, 0.5
        diffs.append(abs(g_value(z, 1.0, m) - 5 / 2**m))
    return _check("g_anchor", max(diffs), 1e-12, f"g((1,1/2,0,...),1) = 5/2^m for m in {list(orders)}")


def run_checks(n=4, m=4, inject_fault=False) -> list[CheckResult]:
    return [
        check_cp_identity(n, m, fault=1.0 if inject_fault else 0.0),
        check_rank_one_forms(n, m),
        check_witness(n, m),
        check_moler(),
        check_g_anchor(),
    ]
