# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

"""
Asymptotic distributional bias and quadratic risk of the five LASSO-based
estimators under local alternatives H beta = h + xi / sqrt(n).

Every quantity is a Poisson(Delta^2 / 2) mixture of central chi-square
terms: ``noncentral_chisq_cdf`` and ``inv_moment`` evaluate those series,
``theorem9_risks`` combines them into per-estimator records and
``risk_curves`` sweeps a Delta^2 grid.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import linalg, stats

from .exceptions import (
    DimensionMismatch, DivergentMoment, InvalidParameter, NumericalError,
    SchemaError,
)
from .model import Restriction
from .reporting import SCHEMA_VERSION, check_schema

logger = logging.getLogger(__name__)

SERIES_TAIL = 1e-12

PAPER_H = (
    (1.0, -1.0, 3.0, 1.0),
    (3.0, 2.0, 1.0, 0.0),
    (4.0, -2.0, 0.0, 5.0),
)


def _poisson_terms(delta2, tail=SERIES_TAIL):
    """
    Mixture indices r and Poisson(delta2 / 2) weights, stopping once the
    remaining tail mass is below ``tail``.
    """
    if delta2 < 0:
        raise InvalidParameter("delta2 must be >= 0, got %r" % delta2)
    if not 0.0 < tail < 1.0:
        raise InvalidParameter("tail must lie in (0, 1), got %r" % tail)
    mu = 0.5 * delta2
    if mu == 0.0:
        return np.zeros(1), np.ones(1)
    # poisson.isf is NaN below about 1e-18
    step = int(math.ceil(math.sqrt(mu))) + 1
    last = int(math.ceil(mu + 10.0 * math.sqrt(mu))) + 10
    while stats.poisson.sf(last, mu) >= tail:
        last += step
    r = np.arange(last + 1, dtype=float)
    return r, stats.poisson.pmf(r, mu)


def noncentral_chisq_cdf(x, nu, delta2, tail=SERIES_TAIL):
    """
    P(chi^2_nu(delta2) <= x) as a Poisson mixture of central CDFs.
    """
    if x < 0:
        raise InvalidParameter("x must be >= 0")
    if nu < 1:
        raise InvalidParameter("degrees of freedom must be >= 1")
    if x == 0:
        return 0.0
    r, weights = _poisson_terms(delta2, tail)
    value = float(weights @ stats.chi2.cdf(x, nu + 2.0 * r))
    return min(max(value, 0.0), 1.0)


def inv_moment(nu_base, s, power, delta2, truncation=None, tail=SERIES_TAIL):
    """
    E[chi^-2_{nu}(delta2)] or E[chi^-4_{nu}(delta2)] with nu = nu_base + s.

    With ``truncation`` k the expectation is restricted to the event
    chi^2_nu(delta2) < k, which weights term r by the central CDF at k with
    nu - 2 + 2r (power -2) or nu - 4 + 2r (power -4) degrees of freedom.
    """
    nu = nu_base + s
    r, weights = _poisson_terms(delta2, tail)
    a = nu - 2.0 + 2.0 * r

    if power == -2:
        if nu <= 2:
            raise DivergentMoment(
                "E[chi^-2] diverges for %d degrees of freedom" % nu
            )
        terms = 1.0 / a
        cdf_df = a
    elif power == -4:
        if nu <= 4:
            raise DivergentMoment(
                "E[chi^-4] diverges for %d degrees of freedom" % nu
            )
        terms = 1.0 / (a * (a - 2.0))
        cdf_df = a - 2.0
    else:
        raise InvalidParameter("power must be -2 or -4, got %r" % power)

    if truncation is not None:
        if truncation < 0:
            raise InvalidParameter("truncation point must be >= 0")
        terms = terms * stats.chi2.cdf(truncation, cdf_df)

    return float(weights @ terms)


def _spd(matrix, name):
    matrix = np.array(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(name + " must be square")
    if not np.allclose(matrix, matrix.T, atol=1e-10):
        raise InvalidParameter(name + " must be symmetric")
    return 0.5 * (matrix + matrix.T)


@dataclass(frozen=True, eq=False)
class RiskScenario:
    """
    Population geometry for the risk formulas: limit Gram matrix ``C``, loss
    weight ``W``, restriction ``(H, h)``, local-alternative direction ``xi``,
    error variance and test level.
    """

    H: np.ndarray
    xi: np.ndarray
    sigma2: float = 1.0
    C: Optional[np.ndarray] = None
    W: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    alpha: float = 0.05

    C_inv: np.ndarray = field(init=False, repr=False)
    delta: np.ndarray = field(init=False, repr=False)
    A: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        if H.ndim != 2:
            raise DimensionMismatch("H must be a matrix")
        q, p = H.shape
        h = np.zeros(q) if self.h is None else self.h
        restriction = Restriction(H, h)

        xi = np.array(self.xi, dtype=float)
        if xi.shape != (q,):
            raise DimensionMismatch("xi must have length q=%d" % q)
        if not self.sigma2 > 0:
            raise InvalidParameter("sigma2 must be > 0")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameter("alpha must lie in (0, 1)")

        C = np.eye(p) if self.C is None else _spd(self.C, "C")
        W = np.eye(p) if self.W is None else _spd(self.W, "W")
        if C.shape != (p, p) or W.shape != (p, p):
            raise DimensionMismatch("C and W must be %d x %d" % (p, p))
        try:
            factor = linalg.cho_factor(C)
        except linalg.LinAlgError:
            raise InvalidParameter("C must be positive definite")
        w_eig = np.linalg.eigvalsh(W)
        if w_eig[0] < -1e-10 * max(abs(w_eig[-1]), 1.0):
            raise InvalidParameter("W must be positive semi-definite")

        C_inv = linalg.cho_solve(factor, np.eye(p))
        C_inv = 0.5 * (C_inv + C_inv.T)
        CHt = C_inv @ H.T
        core = np.linalg.inv(H @ CHt)
        core = 0.5 * (core + core.T)
        A = C_inv - CHt @ core @ CHt.T

        object.__setattr__(self, "H", restriction.H)
        object.__setattr__(self, "h", restriction.h)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "C_inv", C_inv)
        object.__setattr__(self, "delta", CHt @ core @ xi)
        object.__setattr__(self, "A", 0.5 * (A + A.T))

    @property
    def p(self):
        return self.H.shape[1]

    @property
    def q(self):
        return self.H.shape[0]

    @property
    def k(self):
        return self.q - 2

    @property
    def restricted_part(self):
        """C^-1 - A = C^-1 H^T (H C^-1 H^T)^-1 H C^-1."""
        return self.C_inv - self.A

    @property
    def critical_value(self):
        return float(stats.chi2.isf(self.alpha, self.q))

    @classmethod
    def paper_default(cls, sigma2=1.0, alpha=0.05, C=None, W=None):
        """p = 4, q = 3 configuration with h = 0 and xi = (1, 1, 1)."""
        return cls(H=np.array(PAPER_H), xi=np.ones(3), sigma2=sigma2,
                   C=C, W=W, alpha=alpha)

    @classmethod
    def from_dict(cls, document):
        check_schema(document, "scenario")
        try:
            return cls(
                H=document["H"],
                xi=document["xi"],
                sigma2=document.get("sigma2", 1.0),
                C=document.get("C"),
                W=document.get("W"),
                h=document.get("h"),
                alpha=document.get("alpha", 0.05),
            )
        except KeyError as e:
            raise SchemaError("scenario document lacks %s" % e)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "H": self.H.tolist(),
            "h": self.h.tolist(),
            "xi": self.xi.tolist(),
            "sigma2": self.sigma2,
            "C": self.C.tolist(),
            "W": self.W.tolist(),
            "alpha": self.alpha,
        }


def noncentrality(scenario):
    """
    Delta^2 = xi^T (H C^-1 H^T)^-1 xi / sigma^2, cross-checked against
    delta^T C delta / sigma^2.
    """
    s = scenario
    HCH = s.H @ s.C_inv @ s.H.T
    from_xi = float(s.xi @ np.linalg.solve(HCH, s.xi)) / s.sigma2
    from_delta = float(s.delta @ s.C @ s.delta) / s.sigma2
    if abs(from_xi - from_delta) > 1e-8 * max(1.0, abs(from_xi)):
        raise NumericalError(
            "non-centrality forms disagree: %.17g vs %.17g"
            % (from_xi, from_delta)
        )
    return max(from_xi, 0.0)


def _delta_at(scenario, delta2):
    base = noncentrality(scenario)
    if delta2 == base:
        return scenario.delta
    if base == 0.0:
        if delta2 == 0.0:
            return scenario.delta
        raise InvalidParameter(
            "xi = 0 fixes Delta^2 at 0; cannot move along a zero direction"
        )
    return scenario.delta * np.sqrt(delta2 / base)


def _truncated_shrink(nu, k, delta2, squared=False):
    """
    E[(1 - k chi^-2_nu) I(chi^2_nu <= k)], or of the squared factor.
    """
    mass = noncentral_chisq_cdf(k, nu, delta2) if k > 0 else 0.0
    first = inv_moment(nu, 0, -2, delta2, truncation=k)
    if not squared:
        return mass - k * first
    second = inv_moment(nu, 0, -4, delta2, truncation=k)
    return mass - 2.0 * k * first + k * k * second


def _z_term(q, c, delta2):
    return (2.0 * noncentral_chisq_cdf(c, q + 2, delta2)
            - noncentral_chisq_cdf(c, q + 4, delta2))


def auxiliary_ZXQ(scenario, delta2, k=None, classical_stein=False):
    """
    The three auxiliary scalars of the risk formulas, with k = q - 2 unless
    given. ``classical_stein`` replaces E[chi^-2_{q+4}] in X by
    E[chi^-4_{q+2}].
    """
    q = scenario.q
    k = scenario.k if k is None else k
    Z = _z_term(q, scenario.critical_value, delta2)

    if classical_stein:
        second = inv_moment(q, 2, -4, delta2)
    else:
        second = inv_moment(q, 4, -2, delta2)
    X = 2.0 * inv_moment(q, 2, -2, delta2) - k * second

    Q = (2.0 * _truncated_shrink(q + 2, k, delta2)
         - _truncated_shrink(q + 4, k, delta2))

    return Z, X, Q


@dataclass(frozen=True, eq=False)
class RiskRecord:
    estimator: str
    delta2: float
    adb: np.ndarray
    adqb: float
    admse: np.ndarray
    adqr: float
    alpha: Optional[float] = None

    @property
    def adb_norm(self):
        return float(np.linalg.norm(self.adb))

    def row(self):
        return {
            "delta2": self.delta2,
            "estimator": self.estimator,
            "alpha": self.alpha,
            "adb_norm": self.adb_norm,
            "adqb": self.adqb,
            "adqr": self.adqr,
        }


def theorem9_risks(scenario, delta2=None, alphas=None, classical_stein=False,
                   weighted_shrink=False):
    """
    Bias vector, quadratic bias, MSE matrix and weighted quadratic risk of
    ULE, RLE, PTLE (one per level in ``alphas``), SSLE and PRSSLE at
    non-centrality ``delta2`` (the scenario's own value by default).

    The Stein-type shrink terms use the unweighted trace tr(C^-1 - A) unless
    ``weighted_shrink`` is set, in which case W enters them as it does every
    other trace. Quadratic bias is sigma^-2 b^T C b throughout.
    """
    s = scenario
    if delta2 is None:
        delta2 = noncentrality(s)
    delta2 = float(delta2)
    alphas = (s.alpha,) if alphas is None else tuple(alphas)

    sigma2 = s.sigma2
    W = s.W
    delta = _delta_at(s, delta2)
    dd = np.outer(delta, delta)
    dWd = float(delta @ W @ delta)
    restricted_part = s.restricted_part
    tr_wc = float(np.trace(W @ s.C_inv))
    tr_wr = float(np.trace(W @ restricted_part))

    def record(name, b, M, risk, alpha=None):
        adqb = float(b @ s.C @ b) / sigma2
        return RiskRecord(
            estimator=name, delta2=delta2, adb=b, adqb=adqb,
            admse=M, adqr=float(risk), alpha=alpha,
        )

    records = {}
    records["ULE"] = record(
        "ULE", np.zeros(s.p), sigma2 * s.C_inv, sigma2 * tr_wc,
    )
    records["RLE"] = record(
        "RLE", -delta, sigma2 * s.A + dd,
        sigma2 * float(np.trace(W @ s.A)) + dWd,
    )

    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise InvalidParameter("alpha must lie in (0, 1)")
        c = float(stats.chi2.isf(alpha, s.q))
        accept = noncentral_chisq_cdf(c, s.q + 2, delta2)
        Z = _z_term(s.q, c, delta2)
        name = "PTLE(%g)" % alpha
        records[name] = record(
            name,
            -delta * accept,
            sigma2 * s.C_inv - sigma2 * restricted_part * accept + dd * Z,
            sigma2 * tr_wc - sigma2 * tr_wr * accept + dWd * Z,
            alpha=alpha,
        )

    if s.q < 3:
        logger.warning(
            "Stein-type risks omitted: they need q >= 3, scenario has q=%d",
            s.q,
        )
        return records

    k = s.k
    _, X, Q = auxiliary_ZXQ(s, delta2, classical_stein=classical_stein)
    e2 = inv_moment(s.q, 2, -2, delta2)
    e4 = inv_moment(s.q, 4, -4, delta2)
    tr_shrink = tr_wr if weighted_shrink else float(np.trace(restricted_part))

    b4 = -k * delta * e2
    M4 = sigma2 * s.C_inv - k * sigma2 * restricted_part * X + k * (k + 4) * dd * e4
    R4 = sigma2 * tr_wc - k * sigma2 * tr_shrink * X + k * (k + 4) * dWd * e4
    records["SSLE"] = record("SSLE", b4, M4, R4)

    overshoot = _truncated_shrink(s.q + 2, k, delta2)
    overshoot_sq = _truncated_shrink(s.q + 2, k, delta2, squared=True)
    b5 = b4 - delta * overshoot
    M5 = M4 - sigma2 * restricted_part * overshoot_sq - dd * Q
    R5 = R4 - sigma2 * tr_shrink * overshoot_sq - dWd * Q
    records["PRSSLE"] = record("PRSSLE", b5, M5, R5)

    return records


@dataclass(frozen=True, eq=False)
class RiskTable:
    delta2_grid: Tuple[float, ...]
    records: Tuple[RiskRecord, ...]
    sigma2: float = 1.0

    COLUMNS = ("delta2", "estimator", "alpha", "adb_norm", "adqb", "adqr")

    def __post_init__(self):
        grid = tuple(float(v) for v in self.delta2_grid)
        if any(a > b for a, b in zip(grid, grid[1:])):
            raise InvalidParameter("delta2 grid must be ascending")
        for rec in self.records:
            if not rec.adqr > 0:
                raise NumericalError(
                    "non-positive risk %.17g for %s at delta2=%g"
                    % (rec.adqr, rec.estimator, rec.delta2)
                )
        object.__setattr__(self, "delta2_grid", grid)
        object.__setattr__(self, "records", tuple(self.records))

    def to_frame(self):
        return pd.DataFrame(
            [rec.row() for rec in self.records], columns=list(self.COLUMNS),
        )

    def to_csv(self, path_or_buf):
        self.to_frame().to_csv(path_or_buf, index=False, float_format="%.17g")

    def to_json(self):
        document = {
            "schema_version": SCHEMA_VERSION,
            "sigma2": self.sigma2,
            "delta2_grid": list(self.delta2_grid),
            "rows": [rec.row() for rec in self.records],
        }
        return json.dumps(document, indent=2, sort_keys=True)

    def series(self):
        """ADQR per estimator label, aligned with ``delta2_grid``."""
        out = {}
        for rec in self.records:
            out.setdefault(rec.estimator, []).append(rec.adqr)
        return {name: np.array(values) for name, values in out.items()}


def risk_curves(scenario, delta2_grid, alphas=None, threads=1,
                classical_stein=False, weighted_shrink=False):
    grid = [float(v) for v in delta2_grid]
    if not grid:
        raise InvalidParameter("delta2 grid is empty")
    if any(v < 0 for v in grid):
        raise InvalidParameter("delta2 values must be >= 0")
    if any(a > b for a, b in zip(grid, grid[1:])):
        raise InvalidParameter("delta2 grid must be ascending")

    def evaluate(delta2):
        return theorem9_risks(
            scenario, delta2, alphas=alphas,
            classical_stein=classical_stein, weighted_shrink=weighted_shrink,
        )

    logger.info("evaluating risks at %d grid points", len(grid))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(evaluate, grid))
    else:
        blocks = [evaluate(v) for v in grid]

    records = [rec for block in blocks for rec in block.values()]
    return RiskTable(delta2_grid=tuple(grid), records=tuple(records),
                     sigma2=scenario.sigma2)
