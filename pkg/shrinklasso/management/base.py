# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

import logging
import os
import time

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError

import shrinklasso
from shrinklasso.conf import HypothesisSettings, RunSettings
from shrinklasso.exceptions import InputError, ShrinkLassoError
from shrinklasso.evaluation import prostate_restriction
from shrinklasso.reporting import (
    RunManifest, digest_inputs, load_document, restriction_from_dict,
)

logger = logging.getLogger(__name__)

# Options every Django command carries; they never enter a manifest.
DJANGO_OPTIONS = frozenset((
    "verbosity", "settings", "pythonpath", "traceback", "no_color",
    "force_color", "skip_checks", "stdout", "stderr",
))

# Options that may differ between a run and its replay without changing
# the outputs.
REPLAY_OVERRIDES = ("out_dir", "threads", "from_manifest")


def load_restriction(options, inputs):
    if options.get("paper_default_restriction"):
        return prostate_restriction()
    if not options.get("restriction"):
        raise InputError(
            "--restriction or --paper-default-restriction is required"
        )
    inputs.append(options["restriction"])
    return restriction_from_dict(
        load_document(options["restriction"], "restriction")
    )


class ShrinkLassoCommand(BaseCommand):
    """
    Abstract class for the package's management commands.

    Subclasses implement ``add_command_arguments`` and ``run``. ``run`` gets
    the resolved options and returns the paths it wrote together with the
    input files it read; a manifest is written next to every output. Library
    errors are mapped to exit status 2 (bad input) or 3 (numerical failure).
    """

    def add_command_arguments(self, parser):
        raise NotImplementedError()

    def run(self, options):
        raise NotImplementedError()

    def add_arguments(self, parser):
        parser.add_argument(
            "--seed", type=int, default=None,
            help="Base seed for every random stream.",
        )
        parser.add_argument(
            "--threads", type=int, default=None,
            help="Worker threads (default: SHRINKLASSO_THREADS).",
        )
        parser.add_argument(
            "--out-dir", default=None,
            help="Output directory (default: SHRINKLASSO_OUT_DIR).",
        )
        parser.add_argument(
            "--from-manifest", default=None,
            help="Re-run with the options recorded in a manifest file.",
        )
        self.add_command_arguments(parser)

    def add_hypothesis_arguments(self, parser):
        parser.add_argument(
            "--critical", choices=("chi2", "f"), default=None,
            help="Critical value rule for the Wald test.",
        )
        parser.add_argument(
            "--variance-source", choices=("ols", "lasso"), default=None,
            help="Fit and residual variance the Wald statistic is built from.",
        )

    def resolve_hypothesis(self, options):
        defaults = HypothesisSettings()
        options["critical"] = options.get("critical") or defaults.critical
        options["variance_source"] = (
            options.get("variance_source") or defaults.variance_source
        )

    def output_path(self, options, name):
        return os.path.join(options["out_dir"], name)

    def _resolve(self, options):
        options = {
            key: value for key, value in options.items()
            if key not in DJANGO_OPTIONS and key not in ("args",)
        }

        if options.get("from_manifest"):
            manifest = RunManifest.load(options["from_manifest"])
            if manifest.command != self.command_name:
                raise InputError(
                    "manifest was written by %r, not %r"
                    % (manifest.command, self.command_name)
                )
            replay = dict(manifest.options)
            for key in REPLAY_OVERRIDES:
                if options.get(key) is not None:
                    replay[key] = options[key]
            options = replay

        run_settings = RunSettings()
        if options.get("threads") is None:
            options["threads"] = run_settings.threads
        if options.get("out_dir") is None:
            options["out_dir"] = run_settings.out_dir
        if options["threads"] < 1:
            raise InputError("--threads must be >= 1")
        options.pop("from_manifest", None)
        return options

    @property
    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    def handle(self, *args, **options):
        started = time.time()
        try:
            options = self._resolve(options)
            os.makedirs(options["out_dir"], exist_ok=True)
            outputs, inputs = self.run(options)
            digests = digest_inputs(inputs)
        except ShrinkLassoError as e:
            raise CommandError(str(e), returncode=e.exit_code)
        except ImproperlyConfigured as e:
            raise CommandError(str(e), returncode=InputError.exit_code)
        except OSError as e:
            raise CommandError(str(e), returncode=InputError.exit_code)

        duration = time.time() - started
        for path in outputs:
            RunManifest(
                command=self.command_name,
                options=options,
                seed=options.get("seed"),
                version=shrinklasso.__version__,
                inputs=digests,
                duration=duration,
                output=path,
            ).write()
        logger.info("%s finished in %.1fs", self.command_name, duration)
