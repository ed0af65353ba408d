# PEP-8
from flight.management.base import GapCommand
from flight.training.trainer import train_policy


class Command(GapCommand):
    help = "Train the gap-traversal policy by back-propagating through simulated rollouts."

    def add_run_arguments(self, parser):
        parser.add_argument("--resume", help="continue from a training checkpoint")
        parser.add_argument("--iterations", type=int)
        parser.add_argument("--batch", type=int)
        parser.add_argument("--horizon", type=int)
        parser.add_argument("--lr", type=float)
        parser.add_argument("--decay-alpha", type=float, help="per-step gradient decay rate")
        parser.add_argument("--no-bio", action="store_true", help="start every rollout near hover")
        parser.add_argument("--no-sg", action="store_true", help="differentiate the distance gates")

    def overrides(self, options):
        return {
            "train.iterations": options["iterations"],
            "train.batch": options["batch"],
            "train.horizon": options["horizon"],
            "train.lr": options["lr"],
            "train.decay_alpha": options["decay_alpha"],
            "train.use_bimodal": False if options["no_bio"] else None,
            "losses.use_stop_gradient": False if options["no_sg"] else None,
        }

    def run(self, run, out_dir, options):
        result = train_policy(run, out_dir, resume=options["resume"])
        last = result.history[-1]["total"] if result.history else float("nan")
        self.summary(out_dir, "train", {
            "iterations": run.train.iterations,
            "final_total": last,
            "skipped_steps": result.skipped,
            "checkpoint": str(result.checkpoint),
        })
        return f"checkpoint {result.checkpoint}\nfinal total loss {last:.6g}"
