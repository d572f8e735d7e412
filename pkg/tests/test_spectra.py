import math

import numpy as np
import pytest
from scipy import integrate

from rrgipr.errors import DisconnectedGraphError
from rrgipr.graphgen import GraphSpec, complete_graph, cycle_graph, disjoint_union, generate_regular
from rrgipr.spectra import (
    EigenDecomposition,
    eigendecompose,
    eigenvalue_histogram,
    householder_tridiagonalize,
    implicit_ql,
    kesten_mckay_band,
    kesten_mckay_bin_masses,
    kesten_mckay_density,
    laplacian,
    zero_mode_index,
)


def test_k4_spectrum():
    d = eigendecompose(laplacian(complete_graph(4)))
    np.testing.assert_allclose(d.eigenvalues, [0, 4, 4, 4], atol=1e-12)


def test_c4_spectrum():
    d = eigendecompose(laplacian(cycle_graph(4)))
    np.testing.assert_allclose(d.eigenvalues, [0, 2, 2, 4], atol=1e-12)


def test_laplacian_rows_sum_to_zero():
    lap = laplacian(generate_regular(GraphSpec(50, 5, 3)))
    np.testing.assert_allclose(lap.entries.sum(axis=1), 0.0, atol=0)
    assert np.all(np.diag(lap.entries) == 5)


def test_householder_reproduces_matrix(rng):
    a = rng.standard_normal((12, 12))
    a = a + a.T
    diag, off, q = householder_tridiagonalize(a)
    t = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    np.testing.assert_allclose(q @ t @ q.T, a, atol=1e-12)
    np.testing.assert_allclose(q.T @ q, np.eye(12), atol=1e-13)


def test_implicit_ql_on_tridiagonal():
    n = 6
    diag = np.full(n, 2.0)
    off = np.full(n - 1, -1.0)
    w, v = implicit_ql(diag, off, np.eye(n))
    expected = 2 - 2 * np.cos(np.pi * np.arange(1, n + 1) / (n + 1))
    np.testing.assert_allclose(np.sort(w), np.sort(expected), atol=1e-13)


@pytest.mark.parametrize("n,z", [(40, 3), (60, 6)])
def test_native_solver_matches_lapack(n, z):
    lap = laplacian(generate_regular(GraphSpec(n, z, 11)))
    ref = eigendecompose(lap, method="ql")
    for method in ("native", "dc"):
        d = eigendecompose(lap, method=method)
        np.testing.assert_allclose(d.eigenvalues, ref.eigenvalues, atol=1e-10)
        recon = d.eigenvectors @ np.diag(d.eigenvalues) @ d.eigenvectors.T
        assert np.abs(recon - lap.entries).max() < 1e-10 * z


@pytest.mark.parametrize("method", ["ql", "native", "dc"])
def test_eigenpairs_and_orthonormality(method):
    lap = laplacian(generate_regular(GraphSpec(30, 4, 2)))
    d = eigendecompose(lap, method=method)
    v = d.eigenvectors
    assert np.abs(lap.entries @ v - v * d.eigenvalues).max() < 1e-10
    assert np.abs(v.T @ v - np.eye(30)).max() < 1e-12
    assert np.all(np.diff(d.eigenvalues) >= 0)


def test_sign_convention():
    d = eigendecompose(laplacian(generate_regular(GraphSpec(30, 3, 8))))
    v = d.eigenvectors
    idx = np.argmax(np.abs(v), axis=0)
    assert np.all(v[idx, np.arange(30)] > 0)


def test_unknown_method_and_asymmetric_input():
    with pytest.raises(ValueError):
        eigendecompose(np.eye(3), method="jacobi")
    with pytest.raises(ValueError, match="symmetric"):
        eigendecompose(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_zero_mode_is_constant_vector():
    d = eigendecompose(laplacian(generate_regular(GraphSpec(100, 3, 4))))
    k = zero_mode_index(d)
    assert abs(d.eigenvalues[k]) < 1e-10
    x = d.eigenvectors[:, k]
    assert abs(x.sum()) / math.sqrt(100) > 1 - 1e-8


def test_disconnected_graph_rejected():
    d = eigendecompose(laplacian(disjoint_union(complete_graph(4), complete_graph(4))))
    with pytest.raises(DisconnectedGraphError):
        zero_mode_index(d)


def test_kesten_mckay_density_values():
    assert kesten_mckay_density(4.0, 4) == pytest.approx(math.sqrt(3) / (4 * math.pi), rel=1e-12)
    assert kesten_mckay_density(4.0, 4) == pytest.approx(0.137832, abs=1e-6)
    assert kesten_mckay_density(3.0, 3) == pytest.approx(math.sqrt(2) / (3 * math.pi), rel=1e-12)
    lo, hi = kesten_mckay_band(4)
    assert kesten_mckay_density(lo, 4) == pytest.approx(0.0, abs=1e-12)
    assert kesten_mckay_density(hi, 4) == 0.0
    assert kesten_mckay_density(0.0, 3) == 0.0
    np.testing.assert_array_equal(kesten_mckay_density(np.array([-1.0, 100.0]), 4), [0.0, 0.0])


@pytest.mark.parametrize("z", [3, 4, 10, 50])
def test_kesten_mckay_continuum_integrates_to_one(z):
    lo, hi = kesten_mckay_band(z)
    total, _ = integrate.quad(lambda e: kesten_mckay_density(e, z), lo, hi, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)
    edges = np.linspace(lo, hi, 51)
    assert kesten_mckay_bin_masses(edges, z).sum() == pytest.approx(1.0, abs=1e-8)


def test_kesten_mckay_needs_degree_two():
    with pytest.raises(ValueError):
        kesten_mckay_density(1.0, 1)


def test_histogram_of_k4_puts_all_mass_in_one_bin():
    d = eigendecompose(laplacian(complete_graph(4)))
    d = EigenDecomposition(d.eigenvalues, d.eigenvectors, z=3)
    h = eigenvalue_histogram([d], bins=4, range=(0.5, 4.5))
    np.testing.assert_allclose(h.masses, [0, 0, 0, 1.0])
    assert h.zero_mode_mass == 0.25


def test_histogram_averages_per_graph():
    graphs = [generate_regular(GraphSpec(200, 4, s)) for s in range(3)]
    decomps = [eigendecompose(laplacian(g)) for g in graphs]
    h = eigenvalue_histogram(decomps, bins=50)
    assert len(h.centers) == 50 and h.graph_count == 3
    assert h.masses.sum() == pytest.approx(1.0, abs=0.02)
    assert (h.edges[0], h.edges[-1]) == pytest.approx(kesten_mckay_band(4))


def test_histogram_input_errors():
    d = eigendecompose(laplacian(complete_graph(4)).entries)
    with pytest.raises(ValueError, match="range"):
        eigenvalue_histogram([d])
    with pytest.raises(ValueError):
        eigenvalue_histogram([])
