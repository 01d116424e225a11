# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

"""
Real-data protocol: CSV ingestion, k-fold cross-validated prediction error
for every estimator on shared folds, and a bootstrap around it.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from .conf import HypothesisSettings
from .exceptions import (
    CellAborted, EmptyFile, InvalidParameter, MissingColumn, NonNumericCell,
    SchemaError, ShrinkLassoError,
)
from .lasso import LambdaMode, LassoConfig, fold_assignment
from .model import (
    RegressionData, Restriction, center_columns, ols_fit, predict,
)
from .reporting import (
    SCHEMA_VERSION, check_schema, restriction_from_dict, restriction_to_dict,
    write_frame,
)
from .shrinkage import fit_all

logger = logging.getLogger(__name__)

FAILURE_LIMIT = 0.01

PROSTATE_PREDICTORS = (
    "lcavol", "lweight", "age", "lbph", "svi", "lcp", "gleason", "pgg45",
)
PROSTATE_RESPONSE = "lpsa"

PROSTATE_H = (
    (-1.0, 3.0, 1.0, -1.0, 0.0, -1.0, 0.0, 0.0),
    (-1.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0),
    (1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 1.0, 0.0),
)


def prostate_restriction():
    """Three linear constraints on the eight prostate predictors, h = 0."""
    return Restriction(np.array(PROSTATE_H), np.zeros(3))


def load_csv(path, response_column, exclude_columns=()):
    """
    Read a headed CSV file into ``RegressionData``. Every column other than
    the response and ``exclude_columns`` is a predictor, in header order.

    Cells are parsed strictly: anything that is not a finite number (empty
    cells and ``NA`` included) raises ``NonNumericCell`` with its file line
    number, the header being line 1.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise EmptyFile("%s is empty" % path)
    except FileNotFoundError:
        raise InvalidParameter("no such file: %s" % path)

    frame.columns = [str(c).strip() for c in frame.columns]
    if frame.empty:
        raise EmptyFile("%s has a header but no rows" % path)

    for column in (response_column,) + tuple(exclude_columns):
        if column not in frame.columns:
            raise MissingColumn(column)

    predictors = [
        c for c in frame.columns
        if c != response_column and c not in exclude_columns
    ]
    if not predictors:
        raise InvalidParameter("%s has no predictor columns" % path)

    numeric = {}
    for column in predictors + [response_column]:
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce")
        bad = values.isna() | ~np.isfinite(values.fillna(0.0))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise NonNumericCell(row + 2, column, frame[column].iloc[row])
        numeric[column] = values.to_numpy(dtype=float)

    X = np.column_stack([numeric[c] for c in predictors])
    data = RegressionData(
        X, numeric[response_column],
        feature_names=tuple(predictors),
        response_name=response_column,
    )
    logger.info("loaded %s: n=%d, p=%d", path, data.n, data.p)
    return data


@dataclass(frozen=True, eq=False)
class CvDesign:
    restriction: Restriction
    folds: int = 10
    bootstrap_reps: int = 1000
    alpha_list: Tuple[float, ...] = (0.01, 0.05, 0.10)
    seed: int = 0
    response_column: str = PROSTATE_RESPONSE
    inner_folds: int = 10
    grid_length: int = 20
    standardize: bool = False
    center_response: bool = False
    variance_source: Optional[str] = None
    critical: Optional[str] = None

    def __post_init__(self):
        if self.folds < 2:
            raise InvalidParameter("folds must be >= 2")
        if self.bootstrap_reps < 1:
            raise InvalidParameter("bootstrap_reps must be >= 1")
        if self.inner_folds < 2:
            raise InvalidParameter("inner_folds must be >= 2")
        alphas = tuple(float(a) for a in self.alpha_list)
        if not alphas or not all(0.0 < a < 1.0 for a in alphas):
            raise InvalidParameter("alpha_list must hold levels in (0, 1)")
        object.__setattr__(self, "alpha_list", alphas)

    @classmethod
    def from_dict(cls, document):
        check_schema(document, "cv design")
        fields = dict(document)
        fields.pop("schema_version")
        if "restriction" in fields:
            fields["restriction"] = restriction_from_dict(fields["restriction"])
        else:
            fields["restriction"] = prostate_restriction()
        try:
            return cls(**fields)
        except TypeError as e:
            raise SchemaError("bad cv design: %s" % e)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "restriction": restriction_to_dict(self.restriction),
            "folds": self.folds,
            "bootstrap_reps": self.bootstrap_reps,
            "alpha_list": list(self.alpha_list),
            "seed": self.seed,
            "response_column": self.response_column,
            "inner_folds": self.inner_folds,
            "grid_length": self.grid_length,
            "standardize": self.standardize,
            "center_response": self.center_response,
            "variance_source": self.variance_source,
            "critical": self.critical,
        }

    def lasso_config(self):
        return LassoConfig.from_settings(
            mode=LambdaMode.CV, cv_folds=self.inner_folds,
            grid_length=self.grid_length,
        )

    def resolved(self):
        """Copy with the hypothesis-test defaults filled in from settings."""
        if self.variance_source is not None and self.critical is not None:
            return self
        defaults = HypothesisSettings()
        return replace(
            self,
            variance_source=self.variance_source or defaults.variance_source,
            critical=self.critical or defaults.critical,
        )


def _as_int_seed(seed):
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(1)[0])
    return int(seed)


def fit_fold(data, train_index, restriction, cfg, lasso_cfg=None,
             ols_only=False, inner_seed=0):
    """
    Center (and optionally scale) the training rows with their own
    statistics and fit on them. Returns the centered training data, whose
    stored statistics transform held-out rows, and the fitted estimators.
    """
    train = center_columns(
        data.rows(train_index),
        center_response=cfg.center_response, scale=cfg.standardize,
    )
    if ols_only:
        return train, {"OLS": ols_fit(train)}

    lasso_cfg = lasso_cfg or cfg.lasso_config()
    fits = fit_all(
        train, restriction, replace(lasso_cfg, seed=inner_seed),
        cfg.alpha_list, variance_source=cfg.variance_source,
        critical=cfg.critical, include_ols=True,
    )
    return train, fits


def kfold_prediction_errors(data, restriction, cfg, split_seed=0,
                            labels=None, lasso_cfg=None, ols_only=False):
    """
    Total squared prediction error over all held-out rows for every
    estimator, with all estimators sharing the same folds.

    Folds come from ``fold_assignment(n, cfg.folds, split_seed)`` unless
    ``labels`` assigns them explicitly.
    """
    if restriction.p != data.p:
        raise InvalidParameter(
            "restriction has %d columns, data has %d predictors"
            % (restriction.p, data.p)
        )
    cfg = cfg.resolved()
    split_seed = _as_int_seed(split_seed)
    if labels is None:
        labels = fold_assignment(data.n, cfg.folds, split_seed)
    labels = np.asarray(labels)

    totals = {}
    for fold in np.unique(labels):
        held_out = labels == fold
        inner_seed = _as_int_seed(np.random.SeedSequence([split_seed, int(fold)]))
        train, fits = fit_fold(
            data, np.flatnonzero(~held_out), restriction, cfg,
            lasso_cfg=lasso_cfg, ols_only=ols_only, inner_seed=inner_seed,
        )
        y_test = data.y[held_out]
        X_test = data.X[held_out]
        for label, fit in fits.items():
            resid = y_test - predict(train, X_test, fit.beta)
            totals[label] = totals.get(label, 0.0) + float(resid @ resid)
    return totals


def kfold_prediction_error(data, restriction, cfg, estimator, split_seed=0,
                           lasso_cfg=None):
    """
    Cross-validated prediction error of one estimator, named by label
    (``"RLE"``, ``"PTLE(0.05)"``, ...) or ``EstimatorKind``.
    """
    label = getattr(estimator, "value", estimator)
    if label == "PTLE":
        label = "PTLE(%g)" % cfg.alpha_list[0]
    totals = kfold_prediction_errors(
        data, restriction, cfg, split_seed, lasso_cfg=lasso_cfg,
        ols_only=(label == "OLS"),
    )
    try:
        return totals[label]
    except KeyError:
        raise InvalidParameter("no estimator labelled %r" % label)


@dataclass(frozen=True, eq=False)
class PredictionErrorReport:
    labels: Tuple[str, ...]
    series: Dict[str, np.ndarray]
    failures: int = 0
    design: Optional[CvDesign] = field(default=None, repr=False)

    def mean(self, label):
        return float(np.mean(self.series[label]))

    def sd(self, label):
        values = self.series[label]
        if len(values) < 2:
            return 0.0
        return float(np.std(values, ddof=1))

    def to_frame(self):
        rows = []
        for label in self.labels:
            name, alpha = label, None
            if label.startswith("PTLE("):
                name, alpha = "PTLE", float(label[5:-1])
            rows.append({
                "estimator": name, "alpha": alpha,
                "mean_pe": self.mean(label), "sd_pe": self.sd(label),
            })
        return pd.DataFrame(rows, columns=["estimator", "alpha", "mean_pe", "sd_pe"])

    def series_frame(self):
        """Per-replicate errors, one column per estimator, for box plots."""
        frame = pd.DataFrame({label: self.series[label] for label in self.labels})
        frame.index.name = "replicate"
        return frame.reset_index()

    def to_csv(self, path_or_buf):
        write_frame(self.to_frame(), path_or_buf)

    def to_series_csv(self, path_or_buf):
        write_frame(self.series_frame(), path_or_buf)

    def to_text(self):
        frame = pd.DataFrame(
            [[self.mean(label) for label in self.labels],
             [self.sd(label) for label in self.labels]],
            index=["mean", "sd"], columns=list(self.labels),
        )
        return frame.to_string(float_format=lambda v: "%.2f" % v)


def bootstrap_cv(data, cfg, lasso_cfg=None, threads=1):
    """
    Resample rows with replacement, then run the k-fold protocol on each
    resample. Replicate ``b`` is driven by streams seeded with
    ``(cfg.seed, b)`` only, so the report does not depend on ``threads``.
    """
    cfg = cfg.resolved()
    lasso_cfg = lasso_cfg or cfg.lasso_config()

    def one(b):
        resample = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, b, 0])
        ).integers(0, data.n, data.n)
        split_seed = np.random.SeedSequence([cfg.seed, b, 1])
        try:
            return kfold_prediction_errors(
                data.rows(resample), cfg.restriction, cfg, split_seed,
                lasso_cfg=lasso_cfg,
            )
        except (ShrinkLassoError, np.linalg.LinAlgError) as e:
            logger.debug("bootstrap replicate %d failed: %s", b, e)
            return None

    logger.info("running %d bootstrap replicates of %d-fold cv",
                cfg.bootstrap_reps, cfg.folds)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(cfg.bootstrap_reps)))
    else:
        results = [one(b) for b in range(cfg.bootstrap_reps)]

    kept = [res for res in results if res is not None]
    failures = len(results) - len(kept)
    if failures > math.floor(FAILURE_LIMIT * len(results)) or not kept:
        raise CellAborted(
            "%d of %d bootstrap replicates failed" % (failures, len(results))
        )
    if failures:
        logger.warning("excluded %d failed bootstrap replicates", failures)

    labels = tuple(kept[0])
    series = {
        label: np.array([res[label] for res in kept]) for label in labels
    }
    return PredictionErrorReport(
        labels=labels, series=series, failures=failures, design=cfg,
    )
