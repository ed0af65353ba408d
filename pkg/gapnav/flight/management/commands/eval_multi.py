# PEP-8
from flight.harness.evaluation import eval_multi_gap
from flight.harness.reports import write_report
from flight.harness.settings import ResetMode
from flight.management.base import GapCommand, float_pair


class Command(GapCommand):
    help = "Consecutive-gap courses with hidden-state resets."

    def add_run_arguments(self, parser):
        parser.add_argument("--policy", required=True, help="policy checkpoint, with trained heads for classifier resets")
        parser.add_argument("--trials", type=int)
        parser.add_argument("--n-gaps", type=int)
        parser.add_argument("--spacing", type=float_pair, help="low:high gap spacing in metres")
        parser.add_argument("--reset-mode", choices=[m.value for m in ResetMode])

    def overrides(self, options):
        return {
            "eval.trials": options["trials"],
            "eval.n_gaps": options["n_gaps"],
            "eval.course_spacing": options["spacing"],
            "eval.reset_mode": ResetMode(options["reset_mode"]) if options["reset_mode"] else None,
        }

    def run(self, run, out_dir, options):
        params = self.load_params(run, options["policy"])
        report = eval_multi_gap(params, run, run.seed)
        write_report(report, out_dir, "multi_gap")
        lines = [f"success rate {report.success_rate:.3f} ({run.eval.reset_mode.value} reset)"]
        for i in range(run.eval.n_gaps):
            g = report.gap(i)
            lines.append(
                f"gap {i + 1}  pos={g['position_error']:.3f} m  att={g['attitude_error']:.2f} deg  "
                f"success={g['success_rate']:.3f}"
            )
        return "\n".join(lines)
