# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

"""
Regression data model shared by every estimator: the design/response pair,
linear restrictions, Gram-matrix summaries, least squares and residual
variances.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple

import numpy as np
from scipy import linalg

from .exceptions import (
    DegenerateStatistic, DimensionMismatch, InvalidParameter, NonConvergence,
    NumericalError, RankDeficientRestriction, SingularDesign,
)

logger = logging.getLogger(__name__)

EIGEN_RATIO = 1e-10
RANK_TOLERANCE = 1e-10

FLAG_NON_CONVERGENCE = "non_convergence"
FLAG_DEGENERATE_STATISTIC = "degenerate_statistic"


class EstimatorKind(enum.Enum):
    ULE = "ULE"
    RLE = "RLE"
    PTLE = "PTLE"
    SSLE = "SSLE"
    PRSSLE = "PRSSLE"
    OLS = "OLS"
    ROLS = "ROLS"


class VarianceSource(enum.Enum):
    OLS_RESIDUAL = "ols"
    LASSO_RESIDUAL = "lasso"


def _frozen(values, ndim):
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(
            "expected a %d-dimensional array, got shape %s" % (ndim, arr.shape)
        )
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RegressionData:
    """
    Design matrix ``X`` (n x p) and response ``y`` (length n).

    ``column_means`` and ``column_scales`` are set by ``center_columns`` and
    hold the statistics that were removed from the raw predictors, so that
    new rows can be transformed the same way. ``response_mean`` is set only
    when the response was centered too.
    """

    X: np.ndarray
    y: np.ndarray
    column_means: Optional[np.ndarray] = None
    column_scales: Optional[np.ndarray] = None
    response_mean: Optional[float] = None
    feature_names: Tuple[str, ...] = ()
    response_name: str = "y"

    def __post_init__(self):
        X = _frozen(self.X, 2)
        y = _frozen(self.y, 1)
        n, p = X.shape

        if y.shape[0] != n:
            raise DimensionMismatch(
                "response has %d rows, design has %d" % (y.shape[0], n)
            )
        if not n > p >= 1:
            raise InvalidParameter(
                "need n > p >= 1, got n=%d, p=%d" % (n, p)
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidParameter("design and response must be finite")

        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        for name in ("column_means", "column_scales"):
            value = getattr(self, name)
            if value is not None:
                value = _frozen(value, 1)
                if value.shape[0] != p:
                    raise DimensionMismatch(name + " must have length p")
                object.__setattr__(self, name, value)

        names = tuple(self.feature_names) or tuple(
            "x%d" % (j + 1) for j in range(p)
        )
        if len(names) != p:
            raise DimensionMismatch("feature_names must have length p")
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def centered(self):
        return self.column_means is not None

    def rows(self, index):
        """
        Raw sub-sample (or resample, when ``index`` repeats rows). Centering
        metadata is not carried over.
        """
        index = np.asarray(index)
        return RegressionData(
            self.X[index], self.y[index],
            feature_names=self.feature_names,
            response_name=self.response_name,
        )


@dataclass(frozen=True, eq=False)
class Restriction:
    """
    Linear subspace hypothesis ``H beta = h`` with H of full row rank q.
    """

    H: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        H = _frozen(self.H, 2)
        h = _frozen(self.h, 1)
        q, p = H.shape

        if h.shape[0] != q:
            raise DimensionMismatch(
                "h has length %d but H has %d rows" % (h.shape[0], q)
            )
        if not 1 <= q <= p:
            raise InvalidParameter("need 1 <= q <= p, got q=%d, p=%d" % (q, p))
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(h))):
            raise InvalidParameter("restriction must be finite")

        # Column-pivoted QR of H^T; |R_ii| ordered decreasingly.
        _, R, _ = linalg.qr(H.T, mode="economic", pivoting=True)
        tol = RANK_TOLERANCE * max(np.linalg.norm(H, 2), 1e-300)
        rank = int(np.sum(np.abs(np.diag(R)) > tol))
        if rank != q:
            raise RankDeficientRestriction(
                "H has rank %d, expected %d" % (rank, q)
            )

        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)

    @property
    def q(self):
        return self.H.shape[0]

    @property
    def p(self):
        return self.H.shape[1]

    def residual(self, beta):
        return self.H @ np.asarray(beta, dtype=float) - self.h

    def satisfied_by(self, beta, atol=1e-8):
        return bool(np.max(np.abs(self.residual(beta))) <= atol)


@dataclass(frozen=True, eq=False)
class GramSummary:
    C: np.ndarray
    C_inv: np.ndarray
    m: int
    factor: tuple = field(repr=False)

    @property
    def p(self):
        return self.C.shape[0]

    def solve(self, rhs):
        return linalg.cho_solve(self.factor, rhs)


@dataclass(frozen=True, eq=False)
class EstimatorResult:
    """
    A coefficient vector tagged with the estimator that produced it and the
    diagnostics shared by the restricted and shrinkage estimators.
    """

    beta: np.ndarray
    kind: EstimatorKind
    test_stat: Optional[float] = None
    decision: Optional[bool] = None
    shrink_factor: Optional[float] = None
    alpha: Optional[float] = None
    lam: Optional[float] = None
    n_iter: Optional[int] = None
    objective_trace: Tuple[float, ...] = ()
    flags: FrozenSet[str] = frozenset()

    def __post_init__(self):
        beta = _frozen(self.beta, 1)
        if not np.all(np.isfinite(beta)):
            raise NumericalError("%s produced non-finite coefficients"
                                 % self.kind.value)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "flags", frozenset(self.flags))

    @property
    def label(self):
        if self.kind is EstimatorKind.PTLE and self.alpha is not None:
            return "PTLE(%g)" % self.alpha
        return self.kind.value

    @property
    def converged(self):
        return FLAG_NON_CONVERGENCE not in self.flags

    def raise_for_flags(self):
        """Escalate a recorded solver or test condition to its exception."""
        if FLAG_NON_CONVERGENCE in self.flags:
            raise NonConvergence(
                "%s: coordinate descent did not converge" % self.label
            )
        if FLAG_DEGENERATE_STATISTIC in self.flags:
            raise DegenerateStatistic(
                "%s: Wald statistic is exactly zero" % self.label
            )
        return self


def gram_summary(data):
    """
    C_n = X^T X with its inverse from a Cholesky factorization, and the
    residual degrees of freedom m = n - p.
    """
    C = data.X.T @ data.X
    eigenvalues = np.linalg.eigvalsh(C)
    if eigenvalues[0] <= EIGEN_RATIO * eigenvalues[-1]:
        raise SingularDesign(
            "X^T X is numerically singular (eigenvalue ratio %.3g)"
            % (eigenvalues[0] / eigenvalues[-1] if eigenvalues[-1] else 0.0)
        )

    factor = linalg.cho_factor(C)
    C_inv = linalg.cho_solve(factor, np.eye(data.p))
    C_inv = 0.5 * (C_inv + C_inv.T)

    C = _frozen(C, 2)
    C_inv = _frozen(C_inv, 2)
    return GramSummary(C=C, C_inv=C_inv, m=data.n - data.p, factor=factor)


def ols_fit(data, g=None):
    if g is None:
        g = gram_summary(data)
    beta = g.solve(data.X.T @ data.y)
    return EstimatorResult(beta=beta, kind=EstimatorKind.OLS)


def residual_sum_of_squares(data, beta):
    r = data.y - data.X @ beta
    return float(r @ r)


def _check_m(m):
    if int(m) < 1:
        raise InvalidParameter("degrees of freedom m must be >= 1")


def sigma2_ols(data, fit, m):
    """s_e^2 = RSS(OLS) / m."""
    if fit.kind is not EstimatorKind.OLS:
        raise InvalidParameter("sigma2_ols expects an OLS fit")
    _check_m(m)
    return residual_sum_of_squares(data, fit.beta) / m


def sigma2_lasso(data, lasso_fit, m):
    """s_L^2 = RSS(LASSO) / m, with m = n - p as for the OLS variance."""
    if lasso_fit.kind is not EstimatorKind.ULE:
        raise InvalidParameter("sigma2_lasso expects an unrestricted LASSO fit")
    _check_m(m)
    return residual_sum_of_squares(data, lasso_fit.beta) / m


def center_columns(data, center_response=False, scale=False):
    """
    Subtract the column means from every predictor, and optionally divide by
    the column standard deviation (constant columns are left unscaled) and
    center the response. Statistics accumulate when applied to data that
    was already transformed, so stored values always refer to the raw scale.
    """
    means = data.X.mean(axis=0)
    Xc = data.X - means

    scales = np.ones(data.p)
    if scale:
        sd = Xc.std(axis=0, ddof=1)
        nonconstant = sd > 0
        scales[nonconstant] = sd[nonconstant]
        Xc = Xc / scales

    prev_means = data.column_means if data.centered else np.zeros(data.p)
    prev_scales = (
        data.column_scales if data.column_scales is not None
        else np.ones(data.p)
    )

    y = data.y
    response_mean = data.response_mean
    if center_response:
        y_mean = float(y.mean())
        y = y - y_mean
        response_mean = (response_mean or 0.0) + y_mean

    return RegressionData(
        Xc, y,
        column_means=prev_means + prev_scales * means,
        column_scales=prev_scales * scales if (
            scale or data.column_scales is not None
        ) else None,
        response_mean=response_mean,
        feature_names=data.feature_names,
        response_name=data.response_name,
    )


def apply_centering(X, reference):
    """
    Transform raw rows ``X`` with the statistics stored on ``reference``.
    """
    X = np.asarray(X, dtype=float)
    if reference.centered:
        X = X - reference.column_means
    if reference.column_scales is not None:
        X = X / reference.column_scales
    return X


def predict(reference, X, beta):
    """
    Predicted responses for raw rows ``X`` from coefficients fitted on
    ``reference``, on the original response scale.
    """
    fitted = apply_centering(X, reference) @ np.asarray(beta, dtype=float)
    if reference.response_mean is not None:
        fitted = fitted + reference.response_mean
    return fitted
