# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

import logging

import pandas as pd

from shrinklasso.evaluation import load_csv
from shrinklasso.exceptions import InputError
from shrinklasso.lasso import LambdaMode, LassoConfig
from shrinklasso.management.base import ShrinkLassoCommand, load_restriction
from shrinklasso.model import center_columns
from shrinklasso.reporting import write_frame
from shrinklasso.shrinkage import fit_all

logger = logging.getLogger(__name__)


class Command(ShrinkLassoCommand):
    help = (
        "Fit the unrestricted, restricted, preliminary-test and Stein-type "
        "LASSO estimators to a CSV data set and write their coefficients."
    )

    def add_command_arguments(self, parser):
        parser.add_argument("--data", help="CSV file with a header row.")
        parser.add_argument("--response", help="Name of the response column.")
        parser.add_argument(
            "--restriction", help="JSON document with H (row-major) and h.",
        )
        parser.add_argument(
            "--paper-default-restriction", action="store_true",
            help="Use the three prostate-data constraints.",
        )
        parser.add_argument(
            "--drop", nargs="+", default=[],
            help="Columns to ignore (e.g. a train/test flag).",
        )
        parser.add_argument(
            "--alpha", nargs="+", type=float, default=[0.05],
            help="Significance level(s) of the preliminary test.",
        )
        penalty = parser.add_mutually_exclusive_group()
        penalty.add_argument("--lambda", dest="lam", type=float, default=None)
        penalty.add_argument(
            "--cv", action="store_true", help="Select lambda by k-fold CV.",
        )
        penalty.add_argument(
            "--sqrt-n", action="store_true", help="Use lambda = c * sqrt(n).",
        )
        parser.add_argument(
            "--no-center", action="store_true",
            help="Do not center the predictors.",
        )
        parser.add_argument("--center-response", action="store_true")
        parser.add_argument("--standardize", action="store_true")
        parser.add_argument(
            "--strict", action="store_true",
            help="Fail on non-convergence or a zero Wald statistic.",
        )
        parser.add_argument("--output", default="estimates.csv")
        self.add_hypothesis_arguments(parser)

    def run(self, options):
        for flag in ("data", "response"):
            if not options.get(flag):
                raise InputError("--%s is required" % flag)
        if options.get("lam") is None and not (
            options.get("cv") or options.get("sqrt_n")
        ):
            raise InputError("one of --lambda, --cv or --sqrt-n is required")
        if options.get("seed") is None:
            options["seed"] = 0
        self.resolve_hypothesis(options)

        inputs = [options["data"]]
        data = load_csv(options["data"], options["response"],
                        exclude_columns=tuple(options["drop"]))
        if not options["no_center"]:
            data = center_columns(
                data, center_response=options["center_response"],
                scale=options["standardize"],
            )
        restriction = load_restriction(options, inputs)

        if options.get("cv"):
            mode = LambdaMode.CV
        elif options.get("sqrt_n"):
            mode = LambdaMode.SQRT_N
        else:
            mode = LambdaMode.FIXED
        cfg = LassoConfig.from_settings(
            lam=options.get("lam") or 0.0, mode=mode, seed=options["seed"],
        )

        fits = fit_all(
            data, restriction, cfg, options["alpha"],
            variance_source=options["variance_source"],
            critical=options["critical"],
        )

        for warning in fits.warnings:
            self.stderr.write("warning: " + warning)
        if options.get("strict"):
            for fit in fits.values():
                fit.raise_for_flags()

        rows = []
        for fit in fits.values():
            for j, value in enumerate(fit.beta):
                rows.append({
                    "estimator": fit.kind.value,
                    "alpha": fit.alpha,
                    "coefficient": j + 1,
                    "name": data.feature_names[j],
                    "value": value,
                    "test_stat": fit.test_stat,
                    "decision": fit.decision,
                    "lambda": fit.lam,
                    "flags": ";".join(sorted(fit.flags)),
                })
        path = self.output_path(options, options["output"])
        write_frame(pd.DataFrame(rows), path)
        logger.info(
            "Wald statistic %.4f, critical value %.4f at alpha=%g",
            fits.test.statistic, fits.test.critical_value, fits.test.alpha,
        )
        return [path], inputs
