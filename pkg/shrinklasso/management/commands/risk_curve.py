# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

import numpy as np

from shrinklasso.exceptions import InputError
from shrinklasso.management.base import ShrinkLassoCommand
from shrinklasso.reporting import load_document
from shrinklasso.risk import RiskScenario, risk_curves

DEFAULT_GRID = tuple(float(v) for v in np.linspace(0.0, 50.0, 51))


class Command(ShrinkLassoCommand):
    help = (
        "Evaluate asymptotic bias and quadratic risk of every estimator over "
        "a grid of non-centrality values and write them as CSV and JSON."
    )

    def add_command_arguments(self, parser):
        parser.add_argument("--scenario", help="Scenario JSON document.")
        parser.add_argument(
            "--paper-default", action="store_true",
            help="p = 4, q = 3 scenario with C = W = I and xi = (1, 1, 1).",
        )
        parser.add_argument(
            "--sigma2", type=float, default=None,
            help="Override the scenario's error variance.",
        )
        parser.add_argument(
            "--delta2", nargs="*", type=float, default=None,
            help="Ascending Delta^2 grid (default 0, 1, ..., 50).",
        )
        parser.add_argument(
            "--alpha", nargs="+", type=float, default=[0.15, 0.20, 0.25],
            help="Levels of the preliminary test.",
        )
        parser.add_argument(
            "--classical-stein", action="store_true",
            help="Use E[chi^-4_{q+2}] in the Stein risk term.",
        )
        parser.add_argument(
            "--weighted-shrink", action="store_true",
            help="Apply the loss weight W to the Stein shrink terms.",
        )
        parser.add_argument("--output", default="risk.csv")

    def run(self, options):
        inputs = []
        if options.get("scenario"):
            inputs.append(options["scenario"])
            scenario = RiskScenario.from_dict(
                load_document(options["scenario"], "scenario")
            )
        elif options.get("paper_default"):
            scenario = RiskScenario.paper_default()
        else:
            raise InputError("--scenario or --paper-default is required")

        if options.get("sigma2") is not None:
            scenario = RiskScenario(
                H=scenario.H, xi=scenario.xi, sigma2=options["sigma2"],
                C=scenario.C, W=scenario.W, h=scenario.h,
                alpha=scenario.alpha,
            )

        grid = options.get("delta2")
        if grid is None:
            grid = list(DEFAULT_GRID)
            options["delta2"] = grid

        table = risk_curves(
            scenario, grid, alphas=options["alpha"],
            threads=options["threads"],
            classical_stein=options["classical_stein"],
            weighted_shrink=options["weighted_shrink"],
        )

        csv_path = self.output_path(options, options["output"])
        json_path = csv_path.rsplit(".", 1)[0] + ".json"
        table.to_csv(csv_path)
        with open(json_path, "w") as f:
            f.write(table.to_json())
        return [csv_path, json_path], inputs
