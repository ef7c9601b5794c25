import numpy as np
import pytest

from sharedsub import (Distribution, JacobianSet, SampleSet, SpdCollection,
                       draw_samples)


def random_spd(rng, d, scale=1.0):
    """SPD matrix G^T G + eps I with a generic spectrum."""
    g = rng.standard_normal((d + 2, d))
    return scale * (g.T @ g) + 1e-6 * np.eye(d)


def random_spd_collection(rng, d, c, weights=None):
    mats = np.array([random_spd(rng, d) for _ in range(c)])
    if weights is None:
        weights = np.ones(c)
    return SpdCollection(matrices=mats, weights=np.asarray(weights, dtype=float))


def commuting_collection(rng, d, c, weights=None):
    """Matrices sharing one eigenbasis: Q diag_k Q^T."""
    q = np.linalg.qr(rng.standard_normal((d, d)))[0]
    mats = np.array([q @ np.diag(rng.uniform(0.5, 5.0, d)) @ q.T for _ in range(c)])
    mats = 0.5 * (mats + mats.transpose(0, 2, 1))
    if weights is None:
        weights = np.ones(c)
    return SpdCollection(matrices=mats, weights=np.asarray(weights, dtype=float)), q


def random_jacobian_set(rng, n, c, d):
    """Synthetic gradient data with a uniform-symmetric sample attached."""
    dist = Distribution(kind="uniform-symmetric", dim=d)
    sample = SampleSet(points=rng.uniform(-1, 1, (n, d)), distribution=dist, seed=0)
    jac = rng.standard_normal((n, c, d))
    outputs = rng.standard_normal((n, c))
    return JacobianSet(jacobians=jac, sample=sample, outputs=outputs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)
