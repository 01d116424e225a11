# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

"""
Monte Carlo relative-efficiency experiment.

Rows of X are drawn from an equicorrelated Gaussian, the truth has ones in
its leading ``k`` coefficients and a trailing block whose size is tuned to a
target non-centrality, and every replicate fits all five estimators.

Replicate ``i`` of a design with ``p`` columns draws its design and noise
from streams seeded by ``(seed, p, i)`` alone. Cells that differ only in
correlation, sparsity, Delta^2 or test level therefore share their random
numbers, and results do not depend on scheduling or thread count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from .conf import HypothesisSettings
from .exceptions import (
    CellAborted, InvalidParameter, SchemaError, ShrinkLassoError,
)
from .lasso import LambdaMode, LassoConfig
from .model import RegressionData, Restriction
from .reporting import SCHEMA_VERSION, check_schema, write_frame
from .shrinkage import fit_all

logger = logging.getLogger(__name__)

FAILURE_LIMIT = 0.01
TEXT_FORMAT = "%.2f"

# Stream tags within one replicate.
_DESIGN_STREAM = 0
_NOISE_STREAM = 1
_TUNING_STREAM = 2


def equicorrelation(p, r):
    return (1.0 - r) * np.eye(p) + r * np.ones((p, p))


def _check_r(r):
    if not 0.0 <= r < 1.0:
        raise InvalidParameter("equicorrelation r must lie in [0, 1), got %r" % r)


def gen_design(n, p, r, seed):
    """
    n x p matrix with i.i.d. N(0, Sigma) rows, Sigma having unit diagonal
    and off-diagonal ``r``: X = Z U with U^T U = Sigma.
    """
    _check_r(r)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, p))
    if r == 0.0:
        return Z
    U = linalg.cholesky(equicorrelation(p, r), lower=False)
    return Z @ U


def _violation_scale(Sigma, k_nonzero):
    """u^T (H Sigma^-1 H^T)^-1 u for H = [0 | I] and u = 1 / sqrt(q')."""
    p = Sigma.shape[0]
    q = p - k_nonzero
    H = np.hstack([np.zeros((q, k_nonzero)), np.eye(q)])
    HSH = H @ np.linalg.solve(Sigma, H.T)
    u = np.full(q, 1.0 / np.sqrt(q))
    return float(u @ np.linalg.solve(HSH, u)), H


def beta_for_delta2(p, k_nonzero, delta2_target, n=100, r=0.0, sigma_eps=5.0):
    """
    True coefficients and the null restriction "trailing block is zero" for
    a target non-centrality computed with the population covariance:

        Delta^2 = n sigma^-2 (H beta)^T (H Sigma^-1 H^T)^-1 (H beta)
    """
    q = p - k_nonzero
    if q < 1 or k_nonzero < 0:
        raise InvalidParameter(
            "need 0 <= k_nonzero < p, got k=%d, p=%d" % (k_nonzero, p)
        )
    if delta2_target < 0:
        raise InvalidParameter("delta2 must be >= 0")
    _check_r(r)

    scale, H = _violation_scale(equicorrelation(p, r), k_nonzero)
    beta = np.zeros(p)
    beta[:k_nonzero] = 1.0
    if delta2_target > 0:
        tau = np.sqrt(delta2_target * sigma_eps ** 2 / (n * scale))
        beta[k_nonzero:] = tau / np.sqrt(q)
    return beta, Restriction(H, np.zeros(q))


def realized_delta2(beta, restriction, n, r, sigma_eps):
    Sigma = equicorrelation(restriction.p, r)
    d = restriction.residual(beta)
    core = restriction.H @ np.linalg.solve(Sigma, restriction.H.T)
    return float(n * (d @ np.linalg.solve(core, d)) / sigma_eps ** 2)


@dataclass(frozen=True)
class SimDesign:
    n: int = 100
    p_list: Tuple[int, ...] = (10, 20, 30)
    k_list: Tuple[int, ...] = (1, 3, 4, 5, 6)
    r_list: Tuple[float, ...] = (0.0, 0.2, 0.9)
    delta2_list: Tuple[float, ...] = (0, 1, 2, 3, 5, 10, 20, 30, 50)
    reps: int = 2000
    sigma_eps: float = 5.0
    alpha_list: Tuple[float, ...] = (0.15, 0.20, 0.25)
    seed: int = 0
    lambda_mode: LambdaMode = LambdaMode.SQRT_N
    variance_source: Optional[str] = None
    critical: Optional[str] = None

    def __post_init__(self):
        for name in ("p_list", "k_list", "r_list", "delta2_list", "alpha_list"):
            values = tuple(getattr(self, name))
            if not values:
                raise InvalidParameter(name + " must not be empty")
            object.__setattr__(self, name, values)
        object.__setattr__(self, "lambda_mode", LambdaMode(self.lambda_mode))

        if self.reps < 1:
            raise InvalidParameter("reps must be >= 1")
        if not self.sigma_eps > 0:
            raise InvalidParameter("sigma_eps must be > 0")
        for r in self.r_list:
            _check_r(r)
        for p in self.p_list:
            if not self.n > p:
                raise InvalidParameter("need n > p, got n=%d, p=%d" % (self.n, p))
            for k in self.k_list:
                if not 0 <= k < p:
                    raise InvalidParameter(
                        "k_nonzero=%d leaves no restricted block at p=%d" % (k, p)
                    )
        if any(d < 0 for d in self.delta2_list):
            raise InvalidParameter("delta2 values must be >= 0")
        for alpha in self.alpha_list:
            if not 0.0 < alpha < 1.0:
                raise InvalidParameter("alpha must lie in (0, 1)")

    @classmethod
    def paper_default(cls, **overrides):
        return cls(**overrides)

    @classmethod
    def from_dict(cls, document):
        check_schema(document, "simulation design")
        fields = dict(document)
        fields.pop("schema_version")
        try:
            return cls(**fields)
        except TypeError as e:
            raise SchemaError("bad simulation design: %s" % e)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "n": self.n,
            "p_list": list(self.p_list),
            "k_list": list(self.k_list),
            "r_list": list(self.r_list),
            "delta2_list": list(self.delta2_list),
            "reps": self.reps,
            "sigma_eps": self.sigma_eps,
            "alpha_list": list(self.alpha_list),
            "seed": self.seed,
            "lambda_mode": self.lambda_mode.value,
            "variance_source": self.variance_source,
            "critical": self.critical,
        }

    def cells(self):
        return [
            (r, k, float(d2))
            for r in self.r_list
            for k in self.k_list
            for d2 in self.delta2_list
        ]


def _stream(design, p, rep, tag):
    return np.random.SeedSequence([design.seed, p, rep, tag])


def _replicate(design, p, rep, truths, lasso_cfg):
    """
    Squared coefficient errors of every estimator in every cell for one
    replicate, or None for a cell whose fit failed.
    """
    n = design.n
    noise = design.sigma_eps * np.random.default_rng(
        _stream(design, p, rep, _NOISE_STREAM)
    ).standard_normal(n)
    tuning_seed = int(_stream(design, p, rep, _TUNING_STREAM).generate_state(1)[0])
    cfg = replace(lasso_cfg, seed=tuning_seed)

    out = {}
    designs = {}
    for cell, (beta, restriction) in truths.items():
        r = cell[0]
        if r not in designs:
            designs[r] = gen_design(
                n, p, r, _stream(design, p, rep, _DESIGN_STREAM)
            )
        X = designs[r]
        try:
            data = RegressionData(X, X @ beta + noise)
            fits = fit_all(
                data, restriction, cfg, design.alpha_list,
                variance_source=design.variance_source,
                critical=design.critical,
            )
        except (ShrinkLassoError, np.linalg.LinAlgError) as e:
            logger.debug("p=%d rep=%d cell=%s failed: %s", p, rep, cell, e)
            out[cell] = None
            continue
        out[cell] = {
            label: float(np.sum((fit.beta - beta) ** 2))
            for label, fit in fits.items()
        }
    return out


def _ratio_se(num, den):
    """
    Delta-method standard error of mean(num) / mean(den) for paired samples.
    """
    count = len(num)
    if count < 2:
        return float("nan")
    a, b = num.mean(), den.mean()
    cov = np.cov(num, den, ddof=1)
    var = (cov[0, 0] / b ** 2 - 2.0 * a * cov[0, 1] / b ** 3
           + a ** 2 * cov[1, 1] / b ** 4)
    return float(np.sqrt(max(var, 0.0) / count))


def _label_alpha(label):
    if label.startswith("PTLE(") and label.endswith(")"):
        return "PTLE", float(label[5:-1])
    return label, None


@dataclass(frozen=True, eq=False)
class EfficiencyTable:
    """
    Relative efficiency risk(ULE) / risk(estimator) with its Monte Carlo
    standard error, one row per (p, k, r, Delta^2, estimator, alpha).
    """

    frame: pd.DataFrame
    design: SimDesign

    COLUMNS = ("p", "k", "r", "delta2", "estimator", "alpha", "rel_eff",
               "mc_se", "risk", "failures")

    def rel_eff(self, p, k, r, delta2, estimator, alpha=None):
        return float(self._row(p, k, r, delta2, estimator, alpha)["rel_eff"])

    def mc_se(self, p, k, r, delta2, estimator, alpha=None):
        return float(self._row(p, k, r, delta2, estimator, alpha)["mc_se"])

    def risk(self, p, k, r, delta2, estimator, alpha=None):
        return float(self._row(p, k, r, delta2, estimator, alpha)["risk"])

    def _row(self, p, k, r, delta2, estimator, alpha):
        f = self.frame
        mask = ((f["p"] == p) & (f["k"] == k) & np.isclose(f["r"], r)
                & np.isclose(f["delta2"], delta2) & (f["estimator"] == estimator))
        if alpha is None:
            mask &= f["alpha"].isna()
        else:
            mask &= np.isclose(f["alpha"].fillna(-1.0), alpha)
        rows = f[mask]
        if len(rows) != 1:
            raise KeyError((p, k, r, delta2, estimator, alpha))
        return rows.iloc[0]

    def to_csv(self, path_or_buf):
        write_frame(self.frame, path_or_buf)

    def to_text(self):
        """
        One line per (p, r, k, Delta^2) and one column per estimator, in the
        layout of the published relative-efficiency tables.
        """
        f = self.frame.copy()
        f["column"] = [
            name if pd.isna(alpha) else "%s(%g)" % (name, alpha)
            for name, alpha in zip(f["estimator"], f["alpha"])
        ]
        wide = f.pivot_table(
            index=["p", "r", "k", "delta2"], columns="column",
            values="rel_eff", sort=False,
        )
        order = [c for c in dict.fromkeys(f["column"]) if c in wide.columns]
        return wide[order].to_string(float_format=lambda v: TEXT_FORMAT % v)


def run_cell(design, p, k, delta2, r=None, lasso_cfg=None, threads=1):
    """
    Relative efficiencies for a single (p, k, r, Delta^2) cell.
    """
    r = design.r_list[0] if r is None else r
    single = replace(design, p_list=(p,), k_list=(k,), r_list=(r,),
                     delta2_list=(delta2,))
    return run_experiment(single, lasso_cfg=lasso_cfg, threads=threads)


def run_experiment(design, lasso_cfg=None, threads=1):
    """
    Sweep every (p, r, k, Delta^2) cell of ``design``. Deterministic in the
    design seed; ``threads`` only changes how replicates are scheduled.
    """
    if lasso_cfg is None:
        lasso_cfg = LassoConfig.from_settings(mode=design.lambda_mode)
    else:
        lasso_cfg = replace(lasso_cfg, mode=design.lambda_mode)
    if design.variance_source is None or design.critical is None:
        defaults = HypothesisSettings()
        design = replace(
            design,
            variance_source=design.variance_source or defaults.variance_source,
            critical=design.critical or defaults.critical,
        )

    rows = []
    for p in design.p_list:
        cells = design.cells()
        truths = {
            cell: beta_for_delta2(p, cell[1], cell[2], n=design.n, r=cell[0],
                                  sigma_eps=design.sigma_eps)
            for cell in cells
        }
        logger.info("p=%d: %d cells x %d replicates", p, len(cells), design.reps)

        def one(rep):
            return _replicate(design, p, rep, truths, lasso_cfg)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, range(design.reps)))
        else:
            results = [one(rep) for rep in range(design.reps)]

        for cell in cells:
            rows.extend(_aggregate(design, p, cell, [res[cell] for res in results]))

    frame = pd.DataFrame(rows, columns=list(EfficiencyTable.COLUMNS))
    return EfficiencyTable(frame=frame, design=design)


def _aggregate(design, p, cell, outcomes):
    r, k, delta2 = cell
    kept = [o for o in outcomes if o is not None]
    failures = len(outcomes) - len(kept)
    if failures:
        if failures > FAILURE_LIMIT * len(outcomes):
            raise CellAborted(
                "p=%d k=%d r=%g delta2=%g: %d of %d replicates failed"
                % (p, k, r, delta2, failures, len(outcomes))
            )
        logger.warning(
            "p=%d k=%d r=%g delta2=%g: excluded %d failed replicates",
            p, k, r, delta2, failures,
        )
    if not kept:
        raise CellAborted("no replicate succeeded")

    labels = list(kept[0])
    losses = {label: np.array([o[label] for o in kept]) for label in labels}
    reference = losses["ULE"]
    rows = []
    for label in labels:
        name, alpha = _label_alpha(label)
        risk = float(losses[label].mean())
        rows.append({
            "p": p, "k": k, "r": r, "delta2": delta2,
            "estimator": name, "alpha": alpha,
            "rel_eff": float(reference.mean()) / risk,
            "mc_se": 0.0 if label == "ULE" else _ratio_se(reference, losses[label]),
            "risk": risk,
            "failures": failures,
        })
    return rows
