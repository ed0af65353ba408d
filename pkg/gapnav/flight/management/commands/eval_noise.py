# PEP-8
import argparse

from flight.harness.evaluation import eval_target_noise
from flight.harness.reports import write_rows
from flight.management.base import GapCommand


def noise_level(value: str) -> float:
    level = float(value)
    if level < 0:
        raise argparse.ArgumentTypeError(f"noise level must be >= 0, got {value}")
    return level


class Command(GapCommand):
    help = "Single-gap success rate under perturbed target directions."

    def add_run_arguments(self, parser):
        parser.add_argument("--policy", required=True, help="policy checkpoint")
        parser.add_argument("--trials", type=int)
        parser.add_argument("--levels", type=noise_level, nargs="+", help="aim offsets in metres")

    def overrides(self, options):
        return {
            "eval.trials": options["trials"],
            "eval.noise_levels": tuple(options["levels"]) if options["levels"] else None,
        }

    def run(self, run, out_dir, options):
        params = self.load_params(run, options["policy"])
        sweep = eval_target_noise(params, run, run.seed)
        write_rows(out_dir / "noise_success.csv", ("noise", "success_rate", "trials"), sweep.rows())
        write_rows(out_dir / "noise_paths.csv", ("noise", "trial", "step", "x", "y", "z"), sweep.path_rows())
        rates = sweep.success_rates()
        self.summary(out_dir, "noise", {f"success.{level:g}": rate for level, rate in rates.items()})
        return "\n".join(f"noise {level:g} m  success {rate:.3f}" for level, rate in rates.items())
