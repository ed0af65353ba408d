# PEP-8
from flight.harness.evaluation import eval_traversability
from flight.harness.reports import write_rows
from flight.management.base import GapCommand, float_pair


class Command(GapCommand):
    help = "Precision-recall of the traversability head on scaled gaps."

    def add_run_arguments(self, parser):
        parser.add_argument("--policy", required=True, help="checkpoint with trained auxiliary heads")
        parser.add_argument("--trajectories", type=int)
        parser.add_argument("--scale-range", type=float_pair, help="low:high gap scale")

    def overrides(self, options):
        return {
            "eval.trav_trajectories": options["trajectories"],
            "eval.trav_scale_range": options["scale_range"],
        }

    def run(self, run, out_dir, options):
        params = self.load_params(run, options["policy"])
        result = eval_traversability(params, run, run.seed)
        write_rows(out_dir / "trav_scores.csv", ("trajectory", "scale", "label", "score"), result.rows())
        write_rows(out_dir / "pr_curve.csv", ("threshold", "precision", "recall"), result.curve.rows())
        self.summary(out_dir, "trav", {
            "average_precision": result.curve.average_precision,
            "trajectories": result.curve.n_samples,
            "positives": result.curve.n_positive,
        })
        return f"AP {result.curve.average_precision:.4f} ({result.curve.n_positive}/{result.curve.n_samples} traversable)"
