# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

from dataclasses import replace

from shrinklasso.evaluation import CvDesign, bootstrap_cv, load_csv
from shrinklasso.exceptions import InputError
from shrinklasso.management.base import ShrinkLassoCommand, load_restriction
from shrinklasso.reporting import load_document

OVERRIDES = (
    ("reps", "bootstrap_reps"),
    ("folds", "folds"),
    ("alpha", "alpha_list"),
    ("standardize", "standardize"),
    ("center_response", "center_response"),
    ("critical", "critical"),
    ("variance_source", "variance_source"),
)


class Command(ShrinkLassoCommand):
    help = (
        "Bootstrap the k-fold cross-validated prediction error of every "
        "estimator on a CSV data set."
    )

    def add_command_arguments(self, parser):
        parser.add_argument("--data", help="CSV file with a header row.")
        parser.add_argument("--response", default=None)
        parser.add_argument("--design", help="CV design JSON document.")
        parser.add_argument("--restriction")
        parser.add_argument(
            "--paper-default-restriction", action="store_true",
            help="Use the three prostate-data constraints.",
        )
        parser.add_argument("--drop", nargs="+", default=[])
        parser.add_argument("--reps", type=int, default=None)
        parser.add_argument("--folds", type=int, default=None)
        parser.add_argument("--alpha", nargs="+", type=float, default=None)
        parser.add_argument(
            "--standardize", action="store_true", default=None,
        )
        parser.add_argument(
            "--center-response", action="store_true", default=None,
        )
        parser.add_argument("--output", default="cv.csv")
        self.add_hypothesis_arguments(parser)

    def run(self, options):
        if not options.get("data"):
            raise InputError("--data is required")

        inputs = [options["data"]]
        if options.get("design"):
            inputs.append(options["design"])
            design = CvDesign.from_dict(
                load_document(options["design"], "cv design")
            )
            if options.get("restriction") or options.get(
                "paper_default_restriction"
            ):
                design = replace(
                    design, restriction=load_restriction(options, inputs),
                )
        else:
            design = CvDesign(restriction=load_restriction(options, inputs))

        changes = {
            field: options[key] for key, field in OVERRIDES
            if options.get(key) is not None
        }
        if options.get("response"):
            changes["response_column"] = options["response"]
        if options.get("seed") is not None:
            changes["seed"] = options["seed"]
        design = replace(design, **changes)
        options["seed"] = design.seed

        data = load_csv(options["data"], design.response_column,
                        exclude_columns=tuple(options["drop"]))
        report = bootstrap_cv(data, design, threads=options["threads"])

        csv_path = self.output_path(options, options["output"])
        stem = csv_path.rsplit(".", 1)[0]
        series_path = stem + "_series.csv"
        text_path = stem + ".txt"
        report.to_csv(csv_path)
        report.to_series_csv(series_path)
        with open(text_path, "w") as f:
            f.write(report.to_text() + "\n")
        return [csv_path, series_path, text_path], inputs
