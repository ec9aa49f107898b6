import numpy as np
import pytest
from hypothesis import given, strategies as st

from qconsensus import network
from qconsensus.errors import NotSymmetric
from qconsensus.spectral import (
    norm_ws_wi,
    norms_ws_wi,
    power_iteration_norm,
    spectral_summary,
    symmetric_eigenvalues,
)
from conftest import random_connected_graph


def test_identity_eigenvalues():
    assert np.allclose(symmetric_eigenvalues(np.eye(3)), [1, 1, 1])


def test_path3_eigenvalues(path3_w):
    assert np.allclose(symmetric_eigenvalues(path3_w.w), [0, 2 / 3, 1], atol=1e-14)


def test_projector_eigenvalues():
    assert np.allclose(symmetric_eigenvalues(np.full((4, 4), 0.25)), [0, 0, 0, 1], atol=1e-15)


def test_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        symmetric_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_summary_examples(path3_w):
    s = spectral_summary(path3_w)
    assert s.lambda2 == pytest.approx(2 / 3, abs=1e-12) and s.lambda_min == pytest.approx(0, abs=1e-12)
    assert spectral_summary(np.full((5, 5), 0.2)).lambda2 == pytest.approx(0, abs=1e-12)
    two = spectral_summary(np.full((2, 2), 0.5))
    assert two.lambda2 == pytest.approx(0, abs=1e-15) and two.lambda_min == pytest.approx(0, abs=1e-15)


def test_norm_examples(path3_w):
    assert norm_ws_wi(path3_w, 0) == pytest.approx(1.0, abs=1e-12)
    assert norm_ws_wi(path3_w, 1) == pytest.approx(2 / 9, abs=1e-12)
    avg = np.full((6, 6), 1 / 6)
    assert all(abs(norm_ws_wi(avg, s)) < 1e-12 for s in range(1, 5))


def test_power_iteration_examples(path3_w):
    assert power_iteration_norm(np.eye(3)) == pytest.approx(1.0)
    assert power_iteration_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    assert power_iteration_norm(path3_w.w - np.eye(3)) == pytest.approx(1.0, abs=1e-9)


def test_norms_sequence_matches_pointwise(path3_w):
    seq = norms_ws_wi(path3_w, 6)
    assert np.allclose(seq, [norm_ws_wi(path3_w, s) for s in range(6)])


@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 30))
def test_jacobi_matches_lapack(seed, m):
    a = np.random.default_rng(seed).normal(size=(m, m))
    a = a + a.T
    assert np.allclose(symmetric_eigenvalues(a), np.linalg.eigvalsh(a), atol=1e-11 * max(1, np.abs(a).max()))


@pytest.mark.parametrize("seed", range(100))
def test_norm_agrees_with_power_iteration(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 13))
    g = random_connected_graph(m, seed)
    w = network.metropolis_weights(g) if seed % 2 else network.laplacian_weights(g)
    wm = w.w
    kernel = wm - np.eye(m)
    for s in range(11):
        oracle = power_iteration_norm(kernel, seed=seed)
        assert abs(norm_ws_wi(w, s) - oracle) < 1e-6
        kernel = wm @ kernel


@given(seed=st.integers(0, 2**32 - 1), m=st.integers(3, 30), kind=st.sampled_from(["metropolis", "laplacian"]))
def test_norm_bounds_and_monotone(seed, m, kind):
    g = random_connected_graph(m, seed)
    w = network.metropolis_weights(g) if kind == "metropolis" else network.laplacian_weights(g)
    norms = norms_ws_wi(w, 200)
    bound = w.lambda2 ** np.arange(200) * (1 - w.lambda_min)
    assert np.all(norms <= bound + 1e-12)
    assert np.all(np.diff(norms[1:]) <= 1e-15)
    assert norms[-1] <= norms[1] + 1e-15
    eig = w.summary.eigenvalues
    assert eig.min() >= -1 - 1e-10 and eig.max() <= 1 + 1e-10
