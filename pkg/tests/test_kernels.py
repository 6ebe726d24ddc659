import math
import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from covadapt import kernels

KINDS = ("rbf", "matern32", "matern52")


def random_blocks(seed=0, n=40, m=30, d=5):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, d)), rng.normal(size=(m, d))


def test_sq_dists_match_brute_force():
    A, B = random_blocks()
    D = kernels.pairwise_sq_dists(A, B)
    brute = np.array([[np.sum((a - b) ** 2) for b in B] for a in A])
    assert_allclose(D, brute, rtol=1e-10, atol=1e-10)
    assert D.min() >= 0.0


def test_backends_agree_on_sq_dists():
    A, B = random_blocks(seed=1)
    assert_allclose(
        kernels.pairwise_sq_dists(A, B),
        kernels.pairwise_sq_dists_numpy(A, B),
        rtol=1e-10,
        atol=1e-12,
    )


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("ell", [0.1, 1.0, 5.0])
def test_backends_agree_on_stationary_grams(kind, ell):
    A, B = random_blocks(seed=2)
    D = kernels.pairwise_sq_dists_numpy(A, B)
    assert_allclose(
        kernels.stationary_gram(kind, D, ell),
        kernels.stationary_gram_numpy(kind, D, ell),
        rtol=1e-12,
        atol=1e-15,
    )


@pytest.mark.parametrize("kind", KINDS)
def test_stationary_gram_matches_scalar_formulas(kind):
    D = np.array([[0.0, 0.25, 4.0]])
    ell = 0.7
    G = kernels.stationary_gram(kind, D, ell)
    for j, d2 in enumerate(D[0]):
        r = math.sqrt(d2) / ell
        if kind == "rbf":
            expected = math.exp(-0.5 * d2 / ell**2)
        elif kind == "matern32":
            expected = (1 + math.sqrt(3) * r) * math.exp(-math.sqrt(3) * r)
        else:
            expected = (1 + math.sqrt(5) * r + 5 * r**2 / 3) * math.exp(
                -math.sqrt(5) * r
            )
        assert G[0, j] == pytest.approx(expected, rel=1e-12)
    assert G[0, 0] == 1.0


def test_stationary_gram_unknown_kind():
    from covadapt import ConfigError

    with pytest.raises(ConfigError):
        kernels.stationary_gram("laplace", np.zeros((1, 1)), 1.0)
    with pytest.raises(ConfigError):
        kernels.stationary_gram_numpy("laplace", np.zeros((1, 1)), 1.0)


def test_linear_gram_is_plain_inner_product():
    A, B = random_blocks(seed=3)
    assert_allclose(kernels.linear_gram(A, B), A @ B.T, rtol=1e-14)


def test_disable_flag_forces_numpy_backend():
    env = dict(os.environ, COVADAPT_DISABLE_NUMBA="1")
    code = (
        "from covadapt import kernels\n"
        "import numpy as np\n"
        "assert not kernels.numba_enabled()\n"
        "A = np.arange(12.0).reshape(4, 3)\n"
        "D = kernels.pairwise_sq_dists(A, A)\n"
        "assert np.allclose(D, kernels.pairwise_sq_dists_numpy(A, A))\n"
        "print('ok')\n"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"


def test_matern_kernels_decay_monotonically():
    D = np.linspace(0.0, 100.0, 200).reshape(1, -1) ** 2
    for kind in KINDS:
        G = kernels.stationary_gram(kind, D, 1.0)[0]
        assert np.all(np.diff(G) <= 1e-15)
        assert G[-1] < 1e-8
