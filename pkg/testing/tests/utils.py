import numpy as np

from shrinklasso.model import RegressionData, Restriction


def synthetic_data(n=60, p=6, beta=None, sigma=1.0, seed=0, r=0.0):
    """Gaussian design with response X beta + N(0, sigma^2) noise."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    if r:
        X = X @ np.linalg.cholesky((1 - r) * np.eye(p) + r).T
    if beta is None:
        beta = np.linspace(1.0, -1.0, p)
    y = X @ np.asarray(beta, dtype=float) + sigma * rng.standard_normal(n)
    return RegressionData(X, y)


def random_restriction(p, q, seed=0, satisfied_by=None):
    """Full-rank q x p restriction; h is chosen so ``satisfied_by`` holds."""
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((q, p))
    if satisfied_by is None:
        h = rng.standard_normal(q)
    else:
        h = H @ np.asarray(satisfied_by, dtype=float)
    return Restriction(H, h)


def trailing_zero_restriction(p, q):
    """H = [0 | I_q], h = 0."""
    H = np.hstack([np.zeros((q, p - q)), np.eye(q)])
    return Restriction(H, np.zeros(q))
