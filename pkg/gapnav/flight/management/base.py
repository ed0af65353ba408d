# PEP-8
from __future__ import annotations

import sys
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from flight.config import ConfigError, RunConfig, load_config, with_overrides
from flight.policy import PolicyParams, load_checkpoint
from flight.harness.reports import write_summary
from utils.log import logger


USAGE_EXIT = 1
RUNTIME_EXIT = 2
ARGPARSE_EXIT = 2


def float_pair(value: str) -> tuple[float, float]:
    """Parse ``low:high``."""
    low, sep, high = value.partition(":")
    if not sep:
        raise ValueError(f"expected low:high, got {value!r}")
    return float(low), float(high)


class GapCommand(BaseCommand):
    """Shared flags, config loading and exit codes of the gapnav subcommands.

    Exit 1 for usage and config errors, 2 for failures while running.
    """

    stochastic = True
    requires_system_checks = []
    requires_migrations_checks = False

    def add_arguments(self, parser):
        parser.add_argument("--config", help="run config file (JSON)")
        parser.add_argument("--out-dir", default="out", help="directory for logs, reports and checkpoints")
        parser.add_argument("--seed", type=int, required=self.stochastic, help="master seed")
        parser.add_argument("--workers", type=int, help="parallel rollout workers")
        self.add_run_arguments(parser)

    def add_run_arguments(self, parser):
        pass

    def overrides(self, options) -> dict[str, object]:
        return {}

    def run(self, run: RunConfig, out_dir: Path, options) -> str | None:
        raise NotImplementedError

    def run_from_argv(self, argv):
        self._parsed = False
        try:
            super().run_from_argv(argv)
        except SystemExit as e:
            if not self._parsed and e.code == ARGPARSE_EXIT:
                sys.exit(USAGE_EXIT)
            raise

    def execute(self, *args, **options):
        self._parsed = True
        return super().execute(*args, **options)

    def load_run(self, options) -> RunConfig:
        path = options.get("config")
        if path is None and settings.DEFAULT_CONFIG and Path(settings.DEFAULT_CONFIG).is_file():
            path = settings.DEFAULT_CONFIG
        run = load_config(path)
        return with_overrides(run, {
            "seed": options.get("seed"),
            "workers": options.get("workers"),
            **self.overrides(options),
        })

    def handle(self, *args, **options):
        try:
            run = self.load_run(options)
        except ConfigError as e:
            raise CommandError(str(e), returncode=USAGE_EXIT) from e
        out_dir = Path(options["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        try:
            message = self.run(run, out_dir, options)
        except CommandError:
            raise
        except ConfigError as e:
            raise CommandError(str(e), returncode=USAGE_EXIT) from e
        except Exception as e:
            logger.exception(f"{self.__module__.rsplit('.', 1)[-1]} failed")
            raise CommandError(f"{type(e).__name__}: {e}", returncode=RUNTIME_EXIT) from e
        if message:
            self.stdout.write(message)

    def load_params(self, run: RunConfig, path: str) -> PolicyParams:
        return load_checkpoint(path, run.policy)

    def summary(self, out_dir: Path, name: str, values: dict) -> Path:
        return write_summary(out_dir / f"{name}_summary.txt", values)
