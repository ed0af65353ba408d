# PEP-8
from flight.management.base import GapCommand
from flight.training.auxiliary import train_auxiliary


class Command(GapCommand):
    help = "Train the crossing and traversability heads on a frozen policy."

    def add_run_arguments(self, parser):
        parser.add_argument("--policy", required=True, help="policy checkpoint")
        parser.add_argument("--iterations", type=int)
        parser.add_argument("--batch", type=int)
        parser.add_argument("--aux-hidden", type=int, help="hidden width of both auxiliary heads")

    def overrides(self, options):
        return {
            "aux.iterations": options["iterations"],
            "aux.batch": options["batch"],
            "policy.aux_hidden": options["aux_hidden"],
        }

    def run(self, run, out_dir, options):
        result = train_auxiliary(run, options["policy"], out_dir)
        last = result.history[-1] if result.history else {}
        self.summary(out_dir, "train_aux", {
            "iterations": run.aux.iterations,
            "aux_hidden": run.policy.aux_hidden,
            "cross_accuracy": last.get("cross_accuracy", float("nan")),
            "checkpoint": str(result.checkpoint),
        })
        return f"checkpoint {result.checkpoint}"
