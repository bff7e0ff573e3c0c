"""Kernel backends: naive-loop oracles and cross-backend bit-identity."""

import numpy as np
import pytest

from weldwatch import kernels


def naive_correlate_valid(a, w):
    nb, nq, nt = a.shape
    npp, _, nk = w.shape
    out = np.zeros((nb, npp, nt - nk + 1))
    for b in range(nb):
        for p in range(npp):
            for t in range(nt - nk + 1):
                acc = 0.0
                for q in range(nq):
                    for k in range(nk):
                        acc += w[p, q, k] * a[b, q, t + k]
                out[b, p, t] = acc
    return out


def naive_scatter_full(a, w):
    nb, nq, nt = a.shape
    _, npp, nk = w.shape
    out = np.zeros((nb, npp, nt + nk - 1))
    for b in range(nb):
        for q in range(nq):
            for t in range(nt):
                for p in range(npp):
                    for k in range(nk):
                        out[b, p, t + k] += a[b, q, t] * w[q, p, k]
    return out


def naive_weight_grad(g, x):
    nb, npp, ntg = g.shape
    _, nq, ntx = x.shape
    nk = ntx - ntg + 1
    out = np.zeros((npp, nq, nk))
    for p in range(npp):
        for q in range(nq):
            for k in range(nk):
                acc = 0.0
                for b in range(nb):
                    for t in range(ntg):
                        acc += g[b, p, t] * x[b, q, t + k]
                out[p, q, k] = acc
    return out


def random_case(rng):
    nb = int(rng.integers(1, 4))
    nq = int(rng.integers(1, 5))
    npp = int(rng.integers(1, 5))
    nk = int(rng.integers(1, 4))
    nt = int(rng.integers(nk, nk + 8))
    a = rng.normal(size=(nb, nq, nt))
    w_corr = rng.normal(size=(npp, nq, nk))
    w_scat = rng.normal(size=(nq, npp, nk))
    g = rng.normal(size=(nb, npp, nt - nk + 1))
    return a, w_corr, w_scat, g


class TestAgainstNaiveLoops:
    def test_correlate_valid(self):
        rng = np.random.default_rng(101)
        for _ in range(20):
            a, w, _, _ = random_case(rng)
            got = kernels.correlate_valid(a, w)
            np.testing.assert_allclose(got, naive_correlate_valid(a, w), atol=1e-12)

    def test_scatter_full(self):
        rng = np.random.default_rng(102)
        for _ in range(20):
            a, _, w, _ = random_case(rng)
            got = kernels.scatter_full(a, w)
            np.testing.assert_allclose(got, naive_scatter_full(a, w), atol=1e-12)

    def test_weight_grad(self):
        rng = np.random.default_rng(103)
        for _ in range(20):
            a, _, _, g = random_case(rng)
            got = kernels.weight_grad(g, a)
            np.testing.assert_allclose(got, naive_weight_grad(g, a), atol=1e-12)


@pytest.mark.skipif(
    "cython" not in kernels.available_backends(),
    reason="compiled backend not built",
)
class TestBackendBitIdentity:
    """The compiled and pure-numpy backends share one accumulation-order
    contract, so their float64 outputs must be equal bit for bit."""

    def test_all_kernels_bit_identical(self):
        py = kernels.get_backend("python")
        cy = kernels.get_backend("cython")
        rng = np.random.default_rng(104)
        for _ in range(50):
            a, w_corr, w_scat, g = random_case(rng)
            assert np.array_equal(py.correlate_valid(a, w_corr),
                                  cy.correlate_valid(a, w_corr))
            assert np.array_equal(py.scatter_full(a, w_scat),
                                  cy.scatter_full(a, w_scat))
            assert np.array_equal(py.weight_grad(g, a),
                                  cy.weight_grad(g, a))

    def test_bit_identity_at_model_scale(self):
        py = kernels.get_backend("python")
        cy = kernels.get_backend("cython")
        rng = np.random.default_rng(105)
        a = rng.normal(size=(4, 64, 32))
        w = rng.normal(size=(64, 64, 3))
        assert np.array_equal(py.correlate_valid(a, w), cy.correlate_valid(a, w))
        assert np.array_equal(py.scatter_full(a, w), cy.scatter_full(a, w))


class TestBackendSelection:
    def test_active_backend_listed(self):
        assert kernels.backend_name() in kernels.available_backends()

    def test_unknown_backend_rejected(self):
        with pytest.raises(KeyError):
            kernels.get_backend("fortran")
