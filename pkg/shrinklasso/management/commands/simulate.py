# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

from dataclasses import replace

from shrinklasso.exceptions import InputError
from shrinklasso.management.base import ShrinkLassoCommand
from shrinklasso.reporting import load_document
from shrinklasso.simulation import SimDesign, run_experiment

# Command-line overrides and the design fields they replace.
OVERRIDES = (
    ("reps", "reps"),
    ("p", "p_list"),
    ("k", "k_list"),
    ("r", "r_list"),
    ("delta2", "delta2_list"),
    ("alpha", "alpha_list"),
    ("lambda_mode", "lambda_mode"),
    ("critical", "critical"),
    ("variance_source", "variance_source"),
)


class Command(ShrinkLassoCommand):
    help = (
        "Run the Monte Carlo relative-efficiency experiment and write the "
        "efficiency table as CSV and aligned text."
    )

    def add_command_arguments(self, parser):
        parser.add_argument("--design", help="Simulation design JSON document.")
        parser.add_argument(
            "--paper-default-sim", action="store_true",
            help="n = 100, p in {10, 20, 30}, sigma = 5, 2000 replicates.",
        )
        parser.add_argument("--reps", type=int, default=None)
        parser.add_argument("--p", nargs="+", type=int, default=None)
        parser.add_argument("--k", nargs="+", type=int, default=None)
        parser.add_argument("--r", nargs="+", type=float, default=None)
        parser.add_argument("--delta2", nargs="+", type=float, default=None)
        parser.add_argument("--alpha", nargs="+", type=float, default=None)
        parser.add_argument(
            "--lambda-mode", choices=("sqrt_n", "cv"), default=None,
        )
        parser.add_argument("--output", default="efficiency.csv")
        self.add_hypothesis_arguments(parser)

    def run(self, options):
        inputs = []
        if options.get("design"):
            inputs.append(options["design"])
            design = SimDesign.from_dict(
                load_document(options["design"], "simulation design")
            )
        elif options.get("paper_default_sim"):
            design = SimDesign.paper_default()
        else:
            raise InputError("--design or --paper-default-sim is required")

        changes = {
            field: options[key] for key, field in OVERRIDES
            if options.get(key) is not None
        }
        if options.get("seed") is not None:
            changes["seed"] = options["seed"]
        design = replace(design, **changes)
        options["seed"] = design.seed

        table = run_experiment(design, threads=options["threads"])

        csv_path = self.output_path(options, options["output"])
        text_path = csv_path.rsplit(".", 1)[0] + ".txt"
        table.to_csv(csv_path)
        with open(text_path, "w") as f:
            f.write(table.to_text() + "\n")
        return [csv_path, text_path], inputs
