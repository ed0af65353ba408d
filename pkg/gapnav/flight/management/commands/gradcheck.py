# PEP-8
from django.core.management.base import CommandError

from flight.harness.gradcheck import TOLERANCE, gradient_check
from flight.management.base import RUNTIME_EXIT, GapCommand


class Command(GapCommand):
    help = "Compare BPTT gradients with central differences on micro rollouts."

    def add_run_arguments(self, parser):
        parser.add_argument("--steps", type=int, default=5)
        parser.add_argument("--rollouts", type=int, default=1, help="seeds checked, starting at --seed")

    def run(self, run, out_dir, options):
        if options["rollouts"] < 1:
            raise CommandError("--rollouts must be at least 1")
        seeds = range(run.seed, run.seed + options["rollouts"])
        results = {seed: gradient_check(seed, steps=options["steps"]) for seed in seeds}
        worst_seed = max(results, key=lambda s: results[s].max_rel_error)
        result = results[worst_seed]
        failed = [seed for seed, r in results.items() if not r.passed]
        self.summary(out_dir, "gradcheck", {
            "max_rel_error": result.max_rel_error,
            "worst": result.worst,
            "worst_seed": worst_seed,
            "rollouts": len(results),
            "checked": sum(r.checked for r in results.values()),
            "passed": int(not failed),
        })
        self.stdout.write(
            f"max relative error {result.max_rel_error:.3e} "
            f"({result.worst}, seed {worst_seed}, {len(results)} rollouts)"
        )
        if failed:
            raise CommandError(f"gradient check failed for seeds {failed}: {result.max_rel_error:.3e} >= {TOLERANCE:g}",
                               returncode=RUNTIME_EXIT)
