# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

"""
Cyclic coordinate descent for the LASSO objective

    ||y - X beta||^2 + lambda * ||beta||_1

(no 1/2 and no 1/n factor; every lambda in this package uses that scale),
penalty grids, warm-started paths and cross-validated penalty selection.
"""

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .conf import SolverSettings
from .exceptions import DegenerateResponse, InvalidParameter
from .model import EstimatorKind, EstimatorResult, FLAG_NON_CONVERGENCE

logger = logging.getLogger(__name__)

GRID_RATIO = 1e-3


class LambdaMode(enum.Enum):
    FIXED = "fixed"
    CV = "cv"
    SQRT_N = "sqrt_n"


@dataclass(frozen=True, eq=False)
class LassoConfig:
    lam: float = 0.0
    tol: float = 1e-7
    max_iter: int = 10000
    lambda_grid: Optional[Tuple[float, ...]] = None
    cv_folds: int = 10
    seed: int = 0
    grid_length: int = 20
    mode: LambdaMode = LambdaMode.FIXED
    sqrt_n_scale: float = 0.5

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidParameter("lambda must be >= 0")
        if not self.tol > 0:
            raise InvalidParameter("tol must be > 0")
        if self.max_iter < 1:
            raise InvalidParameter("max_iter must be >= 1")
        if self.cv_folds < 2:
            raise InvalidParameter("cv_folds must be >= 2")
        if self.grid_length < 2:
            raise InvalidParameter("grid_length must be >= 2")
        if self.sqrt_n_scale < 0:
            raise InvalidParameter("sqrt_n_scale must be >= 0")

        object.__setattr__(self, "mode", LambdaMode(self.mode))

        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if not grid:
                raise InvalidParameter("lambda_grid must not be empty")
            if any(v < 0 for v in grid):
                raise InvalidParameter("lambda_grid values must be >= 0")
            if any(a <= b for a, b in zip(grid, grid[1:])):
                raise InvalidParameter("lambda_grid must be strictly decreasing")
            object.__setattr__(self, "lambda_grid", grid)

    @classmethod
    def from_settings(cls, **overrides):
        """
        Build a configuration from ``SHRINKLASSO_LASSO``; keyword arguments
        take precedence.
        """
        solver = SolverSettings()
        kwargs = {
            "tol": solver.tol,
            "max_iter": solver.max_iter,
            "cv_folds": solver.cv_folds,
            "grid_length": solver.grid_length,
            "sqrt_n_scale": solver.sqrt_n_scale,
        }
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class LassoPath:
    lambdas: Tuple[float, ...]
    betas: Tuple[np.ndarray, ...]
    cv_errors: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.betas) != len(self.lambdas):
            raise InvalidParameter("lambdas and betas must have equal length")
        if self.cv_errors is not None and (
            len(self.cv_errors) != len(self.lambdas)
        ):
            raise InvalidParameter("cv_errors must match lambdas")

    def nonzero_counts(self):
        return [int(np.count_nonzero(b)) for b in self.betas]


def soft_threshold(z, t):
    """
    sign(z) * max(|z| - t, 0), for scalars or arrays.
    """
    if np.any(np.asarray(t) < 0):
        raise InvalidParameter("threshold must be >= 0")
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0) + 0.0
    if np.ndim(out) == 0:
        return float(out)
    return out


def lasso_objective(data, beta, lam):
    r = data.y - data.X @ beta
    return float(r @ r) + lam * float(np.abs(beta).sum())


def lasso_fit(data, cfg, warm_start=None):
    """
    Minimize ||y - X beta||^2 + lambda ||beta||_1 by cyclic coordinate
    descent with exact soft-threshold updates, until the largest coefficient
    change in a sweep falls below ``cfg.tol``.

    Reaching ``cfg.max_iter`` sweeps does not raise: the last iterate is
    returned flagged ``non_convergence``.
    """
    lam = float(cfg.lam)
    X, y = data.X, data.y
    p = data.p
    col_sq = np.einsum("ij,ij->j", X, X)
    half = 0.5 * lam

    if warm_start is None:
        beta = np.zeros(p)
    else:
        beta = np.array(warm_start, dtype=float)
        if beta.shape != (p,):
            raise InvalidParameter("warm start must have length p")

    r = y - X @ beta
    trace = [float(r @ r) + lam * float(np.abs(beta).sum())]
    columns = [X[:, j] for j in range(p)]
    flags = set()

    for sweep in range(1, cfg.max_iter + 1):
        max_change = 0.0
        for j in range(p):
            c = col_sq[j]
            if c == 0.0:
                continue
            old = beta[j]
            rho = float(columns[j] @ r) + c * old
            if rho > half:
                new = (rho - half) / c
            elif rho < -half:
                new = (rho + half) / c
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                r -= delta * columns[j]
                beta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)

        objective = float(r @ r) + lam * float(np.abs(beta).sum())
        if objective > trace[-1] * (1.0 + 1e-12) + 1e-300:
            logger.debug(
                "objective increased in sweep %d: %.17g -> %.17g",
                sweep, trace[-1], objective,
            )
        trace.append(objective)

        if max_change < cfg.tol:
            break
    else:
        flags.add(FLAG_NON_CONVERGENCE)
        logger.warning(
            "coordinate descent stopped after %d sweeps (lambda=%g) with "
            "coefficient change %.3g > tol %.3g",
            cfg.max_iter, lam, max_change, cfg.tol,
        )

    return EstimatorResult(
        beta=beta,
        kind=EstimatorKind.ULE,
        lam=lam,
        n_iter=sweep,
        objective_trace=tuple(trace),
        flags=frozenset(flags),
    )


def lambda_max(data):
    """Smallest penalty at which the LASSO solution is identically zero."""
    return 2.0 * float(np.max(np.abs(data.X.T @ data.y)))


def lambda_grid_default(data, length):
    """
    ``length`` log-spaced penalties from lambda_max down to
    1e-3 * lambda_max, largest first.
    """
    if length < 2:
        raise InvalidParameter("grid length must be >= 2")
    top = lambda_max(data)
    if top == 0.0:
        raise DegenerateResponse(
            "X^T y is zero; the penalty grid would be all zeros"
        )
    return tuple(float(v) for v in np.geomspace(top, GRID_RATIO * top, length))


def lasso_path(data, cfg, lambdas=None):
    """
    Fit the LASSO along a decreasing penalty sequence, warm-starting each fit
    from the previous solution.
    """
    if lambdas is None:
        lambdas = cfg.lambda_grid or lambda_grid_default(data, cfg.grid_length)
    lambdas = tuple(float(v) for v in lambdas)
    if any(a <= b for a, b in zip(lambdas, lambdas[1:])):
        raise InvalidParameter("path penalties must be strictly decreasing")

    betas = []
    beta = None
    for lam in lambdas:
        fit = lasso_fit(data, replace(cfg, lam=lam, mode=LambdaMode.FIXED),
                        warm_start=beta)
        beta = fit.beta
        betas.append(fit.beta)
    return LassoPath(lambdas=lambdas, betas=tuple(betas))


def fold_assignment(n, folds, seed):
    """
    Fold label (0 .. folds - 1) for each of ``n`` rows: a seeded shuffle cut
    into ``folds`` near-equal parts.
    """
    if not 2 <= folds <= n:
        raise InvalidParameter("need 2 <= folds <= n, got %d" % folds)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    labels = np.empty(n, dtype=int)
    for label, chunk in enumerate(np.array_split(order, folds)):
        labels[chunk] = label
    return labels


def _cv_errors(data, cfg, grid):
    labels = fold_assignment(data.n, cfg.cv_folds, cfg.seed)
    errors = np.zeros(len(grid))

    for label in range(cfg.cv_folds):
        held_out = labels == label
        train = data.rows(np.flatnonzero(~held_out))
        X_test = data.X[held_out]
        y_test = data.y[held_out]
        path = lasso_path(train, cfg, grid)
        for i, beta in enumerate(path.betas):
            resid = y_test - X_test @ beta
            errors[i] += float(resid @ resid)

    return errors / data.n


def cross_validate_path(data, cfg):
    """
    Full-data path over the penalty grid together with the mean out-of-fold
    squared prediction error at every grid value.
    """
    grid = cfg.lambda_grid or lambda_grid_default(data, cfg.grid_length)
    errors = _cv_errors(data, cfg, grid)
    path = lasso_path(data, cfg, grid)
    return LassoPath(
        lambdas=path.lambdas,
        betas=path.betas,
        cv_errors=tuple(float(e) for e in errors),
    )


def select_lambda_cv(data, cfg):
    """
    Grid value with the smallest mean out-of-fold squared prediction error.
    Ties go to the larger penalty, i.e. the sparser model.
    """
    grid = cfg.lambda_grid or lambda_grid_default(data, cfg.grid_length)
    if len(grid) == 1:
        return grid[0]

    errors = _cv_errors(data, cfg, grid)
    best = int(np.argmin(errors))
    logger.debug("cv selected lambda=%g (error %.6g)", grid[best], errors[best])
    return grid[best]


def resolve_lambda(data, cfg):
    if cfg.mode is LambdaMode.CV:
        return select_lambda_cv(data, cfg)
    if cfg.mode is LambdaMode.SQRT_N:
        return cfg.sqrt_n_scale * math.sqrt(data.n)
    return float(cfg.lam)


def fit_tuned(data, cfg):
    """LASSO fit at the penalty chosen by ``cfg.mode``."""
    lam = resolve_lambda(data, cfg)
    return lasso_fit(data, replace(cfg, lam=lam, mode=LambdaMode.FIXED))
