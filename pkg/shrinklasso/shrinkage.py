# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

"""
Restricted, preliminary-test and Stein-type shrinkage LASSO estimators, and
the Wald statistic that drives them.

All constructors are pure functions of immutable inputs. A
``ShrinkageContext`` built once per data set and restriction can be shared
between threads.
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, replace
from numbers import Real

import numpy as np
from scipy import linalg, stats

from .conf import HypothesisSettings
from .exceptions import (
    DegenerateResponse, DimensionMismatch, InvalidParameter, QTooSmall,
    SingularDesign,
)
from .lasso import fit_tuned
from .model import (
    EstimatorKind, EstimatorResult, FLAG_DEGENERATE_STATISTIC,
    VarianceSource, gram_summary, ols_fit, sigma2_lasso, sigma2_ols,
)

logger = logging.getLogger(__name__)

CRITICAL_CHI2 = "chi2"
CRITICAL_F = "f"


def critical_value(alpha, q, m, critical=CRITICAL_CHI2):
    """
    Upper-alpha cut-off for the Wald statistic: the chi-square(q) quantile,
    or q times the F(q, m) quantile.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter("alpha must lie in (0, 1), got %r" % alpha)
    if critical == CRITICAL_CHI2:
        return float(stats.chi2.isf(alpha, q))
    if critical == CRITICAL_F:
        return float(q * stats.f.isf(alpha, q, m))
    raise InvalidParameter("unknown critical value rule %r" % critical)


@dataclass(frozen=True, eq=False)
class ShrinkageContext:
    g: object
    r: object
    correction_kernel: np.ndarray
    wald_core: np.ndarray
    k_n: float
    alpha: float
    critical_value: float
    critical: str = CRITICAL_CHI2

    def at_level(self, alpha):
        """The same context tested at another significance level."""
        return replace(
            self,
            alpha=float(alpha),
            critical_value=critical_value(
                alpha, self.r.q, self.g.m, self.critical
            ),
        )


def shrinkage_context(g, r, alpha, critical=CRITICAL_CHI2):
    if r.p != g.p:
        raise DimensionMismatch(
            "restriction has %d columns, design has %d" % (r.p, g.p)
        )

    # H C^-1 H^T, q x q
    HCH = r.H @ g.C_inv @ r.H.T
    HCH = 0.5 * (HCH + HCH.T)
    try:
        factor = linalg.cho_factor(HCH)
    except linalg.LinAlgError:
        raise SingularDesign("H C^-1 H^T is not positive definite")

    wald_core = linalg.cho_solve(factor, np.eye(r.q))
    wald_core = 0.5 * (wald_core + wald_core.T)
    kernel = g.C_inv @ r.H.T @ wald_core

    m = g.m
    return ShrinkageContext(
        g=g,
        r=r,
        correction_kernel=kernel,
        wald_core=wald_core,
        k_n=m * (r.q - 2) / (m + 2.0),
        alpha=float(alpha),
        critical_value=critical_value(alpha, r.q, m, critical),
        critical=critical,
    )


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    variance_source: VarianceSource
    accepted: bool
    alpha: float
    critical_value: float


def _require_kind(result, kind):
    if result.kind is not kind:
        raise InvalidParameter(
            "expected a %s result, got %s" % (kind.value, result.kind.value)
        )


def _project(beta, ctx):
    return beta - ctx.correction_kernel @ ctx.r.residual(beta)


def restricted_lasso(base, ctx):
    """
    Move the unrestricted LASSO onto ``H beta = h`` along C^-1 H^T.
    """
    _require_kind(base, EstimatorKind.ULE)
    return EstimatorResult(
        beta=_project(base.beta, ctx),
        kind=EstimatorKind.RLE,
        lam=base.lam,
        flags=base.flags,
    )


def restricted_ols(ols, ctx):
    """Restricted least squares: the same projection applied to OLS."""
    _require_kind(ols, EstimatorKind.OLS)
    return EstimatorResult(
        beta=_project(ols.beta, ctx), kind=EstimatorKind.ROLS,
    )


def wald_statistic(beta_hat, ctx, s2, variance_source=VarianceSource.OLS_RESIDUAL):
    if not s2 > 0:
        raise InvalidParameter("residual variance must be > 0, got %r" % s2)

    d = ctx.r.residual(beta_hat)
    statistic = max(float(d @ ctx.wald_core @ d) / s2, 0.0)
    return TestOutcome(
        statistic=statistic,
        variance_source=VarianceSource(variance_source),
        accepted=statistic <= ctx.critical_value,
        alpha=ctx.alpha,
        critical_value=ctx.critical_value,
    )


def preliminary_test_lasso(base, restricted, test):
    chosen = restricted if test.accepted else base
    return EstimatorResult(
        beta=chosen.beta.copy(),
        kind=EstimatorKind.PTLE,
        test_stat=test.statistic,
        decision=test.accepted,
        alpha=test.alpha,
        lam=base.lam,
        flags=base.flags,
    )


def _degenerate(kind, base, restricted, test):
    logger.warning(
        "%s: Wald statistic is exactly zero, returning the restricted fit",
        kind.value,
    )
    return EstimatorResult(
        beta=restricted.beta.copy(),
        kind=kind,
        test_stat=0.0,
        decision=test.accepted,
        lam=base.lam,
        flags=base.flags | {FLAG_DEGENERATE_STATISTIC},
    )


def _check_stein(ctx):
    if ctx.r.q < 3:
        raise QTooSmall(
            "Stein-type shrinkage needs q >= 3, restriction has q=%d" % ctx.r.q
        )


def _shrunk(base, restricted, factor):
    return base.beta - factor * (base.beta - restricted.beta)


def stein_shrinkage_lasso(base, restricted, test, ctx):
    """
    Shrink the LASSO toward the restricted LASSO by k_n / L_n.
    """
    _check_stein(ctx)
    if test.statistic == 0.0:
        return _degenerate(EstimatorKind.SSLE, base, restricted, test)

    factor = ctx.k_n / test.statistic
    return EstimatorResult(
        beta=_shrunk(base, restricted, factor),
        kind=EstimatorKind.SSLE,
        test_stat=test.statistic,
        decision=test.accepted,
        shrink_factor=factor,
        lam=base.lam,
        flags=base.flags,
    )


def positive_rule_lasso(base, restricted, test, ctx):
    """
    Stein-type shrinkage with the overshoot past the restricted fit removed:
    the restricted LASSO whenever L_n <= k_n, otherwise exactly the SSLE.
    """
    _check_stein(ctx)
    if test.statistic == 0.0:
        return _degenerate(EstimatorKind.PRSSLE, base, restricted, test)

    factor = ctx.k_n / test.statistic
    if test.statistic <= ctx.k_n:
        beta = restricted.beta.copy()
    else:
        beta = _shrunk(base, restricted, factor)

    return EstimatorResult(
        beta=beta,
        kind=EstimatorKind.PRSSLE,
        test_stat=test.statistic,
        decision=test.accepted,
        shrink_factor=factor,
        lam=base.lam,
        flags=base.flags,
    )


class FitResults(Mapping):
    """
    Estimator results keyed by label (``"ULE"``, ``"RLE"``, ``"PTLE(0.05)"``,
    ``"SSLE"``, ...). Indexing by ``EstimatorKind`` also works; for PTLE it
    returns the fit at the first requested level.
    """

    def __init__(self, results, test, context, s2, warnings=()):
        self._results = dict(results)
        self.test = test
        self.context = context
        self.s2 = s2
        self.warnings = list(warnings)

    def __getitem__(self, key):
        if isinstance(key, EstimatorKind):
            for result in self._results.values():
                if result.kind is key:
                    return result
            raise KeyError(key)
        return self._results[key]

    def __iter__(self):
        return iter(self._results)

    def __len__(self):
        return len(self._results)

    def __contains__(self, key):
        try:
            self[key]
        except KeyError:
            return False
        return True

    def ptle(self, alpha):
        return self._results["PTLE(%g)" % alpha]


def _as_alphas(alpha):
    if isinstance(alpha, Real):
        return (float(alpha),)
    alphas = tuple(float(a) for a in alpha)
    if not alphas:
        raise InvalidParameter("at least one significance level is required")
    return alphas


def fit_all(data, r, lasso_cfg, alpha, variance_source=None, critical=None,
            include_ols=False):
    """
    Fit the unrestricted LASSO and derive every improved estimator from it.

    ``alpha`` may be a single level or a sequence; one PTLE is produced per
    level. The Wald statistic is built from OLS and s_e^2 by default, or from
    the LASSO and s_L^2 when ``variance_source`` is ``"lasso"``. Defaults for
    ``variance_source`` and ``critical`` come from ``HypothesisSettings``.
    Stein-type members are omitted, with a warning, when q < 3.
    """
    alphas = _as_alphas(alpha)
    if variance_source is None or critical is None:
        defaults = HypothesisSettings()
        variance_source = variance_source or defaults.variance_source
        critical = critical or defaults.critical
    variance_source = VarianceSource(variance_source)

    g = gram_summary(data)
    ctx = shrinkage_context(g, r, alphas[0], critical)
    base = fit_tuned(data, lasso_cfg)
    ols = ols_fit(data, g)

    if variance_source is VarianceSource.OLS_RESIDUAL:
        s2 = sigma2_ols(data, ols, g.m)
        beta_hat = ols.beta
    else:
        s2 = sigma2_lasso(data, base, g.m)
        beta_hat = base.beta
    if s2 <= 0.0:
        raise DegenerateResponse("residual variance is zero")

    results = {}
    if include_ols:
        results["OLS"] = ols
        results["ROLS"] = restricted_ols(ols, ctx)
    results["ULE"] = base
    rle = restricted_lasso(base, ctx)
    results["RLE"] = rle

    test = None
    for level in alphas:
        outcome = wald_statistic(beta_hat, ctx.at_level(level), s2,
                                 variance_source)
        if test is None:
            test = outcome
        ptle = preliminary_test_lasso(base, rle, outcome)
        results[ptle.label] = ptle

    warnings = []
    if r.q < 3:
        message = (
            "SSLE and PRSSLE omitted: Stein-type shrinkage needs q >= 3, "
            "restriction has q=%d" % r.q
        )
        logger.warning(message)
        warnings.append(message)
    else:
        results["SSLE"] = stein_shrinkage_lasso(base, rle, test, ctx)
        results["PRSSLE"] = positive_rule_lasso(base, rle, test, ctx)

    if not base.converged:
        warnings.append(
            "LASSO did not converge within %d sweeps" % lasso_cfg.max_iter
        )

    return FitResults(results, test=test, context=ctx, s2=s2,
                      warnings=warnings)
