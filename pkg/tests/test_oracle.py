import json

import numpy as np
import pytest

from motensor.family import cp_certificate, essential_mo, mo_tensor, n_tensor, structured
from motensor.heigen import lambda_min_estimate
from motensor.oracle import dense_eval, h_eigen_scan_2d, psd_scan
from motensor.supmo import alpha_star
from motensor.tensor import FamilySpec, RankOneSum, eval_poly, materialize

from conftest import random_rank_one


class TestDenseEval:
    def test_identity_like(self):
        for n in (1, 3, 5):
            D = materialize(RankOneSum(4, n, np.ones(n), np.eye(n)))
            assert dense_eval(D, np.ones(n)) == n

    def test_n22(self):
        assert dense_eval(materialize(n_tensor(2, 2)), [1.0, -1.0]) == -2.0

    def test_agrees_with_eval_poly(self, rng):
        for _ in range(500):
            T = random_rank_one(rng)
            x = rng.normal(size=T.dim)
            ref = dense_eval(materialize(T), x)
            assert abs(eval_poly(T, x) - ref) <= 1e-10 * max(1.0, abs(ref))

    def test_batch(self, rng):
        T = random_rank_one(rng, n=3, m=4)
        X = rng.normal(size=(5, 3))
        np.testing.assert_allclose(dense_eval(materialize(T), X), eval_poly(T, X), rtol=1e-12)


class TestPsdScan:
    def test_n22(self):
        res = psd_scan(n_tensor(2, 2))
        assert res.value == pytest.approx(-1.0, abs=1e-4)
        assert abs(res.x[0]) == pytest.approx(2**-0.5, abs=1e-2)
        assert res.x[0] * res.x[1] < 0

    def test_essential_positive(self):
        _, cert = essential_mo(3, 4)
        assert psd_scan(cert.terms).value > 0

    def test_sub_mo_negative(self):
        assert psd_scan(mo_tensor(2, 4, -0.6)).disproves_psd

    def test_dense_input(self):
        T = mo_tensor(2, 4, -0.6)
        assert psd_scan(materialize(T), samples=500).value == pytest.approx(psd_scan(T, samples=500).value)

    def test_rejects_odd(self):
        with pytest.raises(ValueError):
            psd_scan(mo_tensor(2, 3, 0.5))

    def test_cp_instances(self):
        for alpha in (0.0, 0.5, 1.0):
            for n in (1, 2, 3, 4):
                assert psd_scan(cp_certificate(n, 4, alpha).terms, samples=2000).value >= -1e-10

    def test_seeded(self):
        a = psd_scan(mo_tensor(4, 4, 1.3), seed=3, samples=100)
        b = psd_scan(mo_tensor(4, 4, 1.3), seed=3, samples=100)
        assert a.value == b.value


class TestScan2d:
    def test_moler(self):
        rep = h_eigen_scan_2d(structured(FamilySpec("moler", 2)))
        ref = np.linalg.eigvalsh(np.array([[1.0, -1.0], [-1.0, 2.0]]))
        np.testing.assert_allclose(rep.lambdas, ref, atol=1e-12)
        assert not rep.warnings

    def test_diagonal_quartic(self):
        rep = h_eigen_scan_2d(RankOneSum(4, 2, [1.0, 1.0], np.eye(2)))
        assert all(lam == pytest.approx(1.0) for lam in rep.lambdas)
        assert len(rep.pairs) >= 2

    def test_sup_mo_matches_estimator(self):
        a = alpha_star(4).alpha_star
        T = mo_tensor(2, 4, a)
        rep = h_eigen_scan_2d(T)
        assert rep.smallest.lam == pytest.approx(lambda_min_estimate(T).lam, abs=1e-6)

    def test_residuals_and_order(self, rng):
        for _ in range(10):
            T = random_rank_one(rng, n=2, orders=(2, 4, 6))
            rep = h_eigen_scan_2d(T)
            assert all(p.kkt_residual <= 1e-10 for p in rep.pairs)
            assert rep.lambdas == sorted(rep.lambdas)
            if rep.pairs:
                assert rep.smallest.lam == pytest.approx(lambda_min_estimate(T, starts=16).lam, abs=1e-6)

    def test_axis_eigenvector(self):
        # (0, 1) is an eigenvector of a diagonal tensor; found through the s-scan
        T = RankOneSum(4, 2, [3.0, 1.0], np.eye(2))
        rep = h_eigen_scan_2d(T)
        assert any(np.allclose(np.abs(p.x), [0.0, 1.0]) and p.lam == pytest.approx(1.0) for p in rep.pairs)

    def test_json(self):
        rep = h_eigen_scan_2d(mo_tensor(2, 4, 0.5))
        data = json.loads(rep.dumps())
        assert len(data["pairs"]) == len(rep.pairs)

    def test_rejects(self):
        with pytest.raises(ValueError):
            h_eigen_scan_2d(mo_tensor(3, 4, 1.0))
