# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

import os

import django.conf
from django.core.exceptions import ImproperlyConfigured
from django.test.signals import setting_changed


def _settings_value(key, default=None):
    if not django.conf.settings.configured:
        return default
    return getattr(django.conf.settings, key, default)


class BaseConfigurable(object):
    """
    Abstract class for components that read their defaults from Django
    settings.

    Subclasses list the setting keys they understand in ``REQUIRED_SETTINGS``
    and ``OPTIONAL_SETTINGS`` and implement ``load_setting``. Values are loaded
    once at construction and again whenever one of the keys changes (from the
    ``setting_changed`` signal, which ``override_settings`` sends in tests).

    When Django settings have not been configured at all, as happens when the
    package is used as a plain library, optional settings load as ``None`` and
    required settings raise ``ImproperlyConfigured``.
    """

    REQUIRED_SETTINGS = ()
    OPTIONAL_SETTINGS = ()

    def load_setting(self, setting, value):
        """
        Called initially for each of the keys in REQUIRED_SETTINGS and
        OPTIONAL_SETTINGS, and again whenever any of these settings change.
        Passed the setting key and the new value, which may be None for the
        keys in OPTIONAL_SETTINGS.
        """
        raise NotImplementedError()

    def _on_setting_changed(self, sender, setting, value, **kwargs):
        if (
            setting in self.REQUIRED_SETTINGS or
            setting in self.OPTIONAL_SETTINGS
        ):
            self.load_setting(setting, value)

    def __init__(self):
        if not self.REQUIRED_SETTINGS and not self.OPTIONAL_SETTINGS:
            return

        for key in self.REQUIRED_SETTINGS:
            missing = object()
            value = _settings_value(key, missing)
            if value is missing:
                raise ImproperlyConfigured(
                    self.__class__.__name__ + " requires setting " + key
                )
            self.load_setting(key, value)

        for key in self.OPTIONAL_SETTINGS:
            self.load_setting(key, _settings_value(key))

        setting_changed.connect(self._on_setting_changed)


class SolverSettings(BaseConfigurable):
    """
    Coordinate-descent and tuning defaults, configured by the dictionary
    ``SHRINKLASSO_LASSO`` with the following optional keys:

        ``TOL``             convergence tolerance on the largest coefficient
                            change per sweep (default 1e-7)

        ``MAX_ITER``        maximum number of full sweeps (default 10000)

        ``CV_FOLDS``        folds used to select the penalty (default 10)

        ``GRID_LENGTH``     length of the automatic penalty grid (default 20)

        ``SQRT_N_SCALE``    constant c of the fixed rule lambda = c * sqrt(n)
                            (default 0.5)
    """

    OPTIONAL_SETTINGS = ("SHRINKLASSO_LASSO",)

    DEFAULTS = {
        "TOL": 1e-7,
        "MAX_ITER": 10000,
        "CV_FOLDS": 10,
        "GRID_LENGTH": 20,
        "SQRT_N_SCALE": 0.5,
    }

    def load_setting(self, setting, value):
        value = value or {}

        unknown = set(value) - set(self.DEFAULTS)
        if unknown:
            raise ImproperlyConfigured(
                self.__class__.__name__ + " unknown keys in " + setting +
                ": " + ", ".join(sorted(unknown))
            )

        merged = dict(self.DEFAULTS, **value)
        try:
            self.tol = float(merged["TOL"])
            self.max_iter = int(merged["MAX_ITER"])
            self.cv_folds = int(merged["CV_FOLDS"])
            self.grid_length = int(merged["GRID_LENGTH"])
            self.sqrt_n_scale = float(merged["SQRT_N_SCALE"])
        except (TypeError, ValueError):
            raise ImproperlyConfigured(
                self.__class__.__name__ + " invalid value in " + setting
            )

        if self.tol <= 0 or self.max_iter < 1:
            raise ImproperlyConfigured(
                self.__class__.__name__ + " requires TOL > 0 and MAX_ITER >= 1"
            )
        if self.cv_folds < 2 or self.grid_length < 2:
            raise ImproperlyConfigured(
                self.__class__.__name__ +
                " requires CV_FOLDS >= 2 and GRID_LENGTH >= 2"
            )


class HypothesisSettings(BaseConfigurable):
    """
    Defaults for the Wald test driving the preliminary-test and Stein-type
    estimators.

      ``SHRINKLASSO_CRITICAL_VALUE``    ``chi2`` uses the upper quantile of
      the central chi-square with q degrees of freedom (*default*), ``f`` uses
      q times the upper quantile of F(q, n - p)

      ``SHRINKLASSO_VARIANCE_SOURCE``   ``ols`` builds the statistic from the
      least-squares fit and its residual variance (*default*), ``lasso`` from
      the LASSO fit and the LASSO residual variance
    """

    OPTIONAL_SETTINGS = (
        "SHRINKLASSO_CRITICAL_VALUE", "SHRINKLASSO_VARIANCE_SOURCE",
    )

    OPTIONS = {
        "SHRINKLASSO_CRITICAL_VALUE": ("chi2", "f"),
        "SHRINKLASSO_VARIANCE_SOURCE": ("ols", "lasso"),
    }

    def load_setting(self, setting, value):
        value = (value or self.OPTIONS[setting][0]).lower()

        if value not in self.OPTIONS[setting]:
            raise ImproperlyConfigured(
                self.__class__.__name__ + " invalid option for " + setting
            )

        if setting == "SHRINKLASSO_CRITICAL_VALUE":
            self.critical = value
        else:
            self.variance_source = value


class RunSettings(BaseConfigurable):
    """
    Execution defaults for the management commands: ``SHRINKLASSO_THREADS``
    (worker threads, defaults to the number of CPUs) and
    ``SHRINKLASSO_OUT_DIR`` (output directory, defaults to the working
    directory).
    """

    OPTIONAL_SETTINGS = ("SHRINKLASSO_THREADS", "SHRINKLASSO_OUT_DIR")

    def load_setting(self, setting, value):
        if setting == "SHRINKLASSO_THREADS":
            if value is None:
                value = os.cpu_count() or 1
            try:
                self.threads = int(value)
            except (TypeError, ValueError):
                raise ImproperlyConfigured(
                    self.__class__.__name__ + " invalid SHRINKLASSO_THREADS"
                )
            if self.threads < 1:
                raise ImproperlyConfigured(
                    self.__class__.__name__ + " requires SHRINKLASSO_THREADS >= 1"
                )
        elif setting == "SHRINKLASSO_OUT_DIR":
            self.out_dir = value or os.getcwd()
