# PEP-8
from flight.harness.evaluation import eval_single_gap
from flight.harness.metrics import TILT_BUCKETS
from flight.harness.reports import write_report
from flight.management.base import GapCommand, float_pair


class Command(GapCommand):
    help = "Single-gap trials with crossing errors bucketed by gap tilt."

    def add_run_arguments(self, parser):
        parser.add_argument("--policy", required=True, help="policy checkpoint")
        parser.add_argument("--trials", type=int)
        parser.add_argument("--tilt-range", type=float_pair, help="low:high in degrees")

    def overrides(self, options):
        return {"eval.trials": options["trials"], "eval.tilt_range_deg": options["tilt_range"]}

    def run(self, run, out_dir, options):
        params = self.load_params(run, options["policy"])
        report = eval_single_gap(params, run, run.seed)
        write_report(report, out_dir, "single_gap")
        lines = [f"success rate {report.success_rate:.3f}"]
        for name, _, _ in TILT_BUCKETS:
            b = report.bucket(name)
            lines.append(
                f"{name:>6} deg  n={b['count']:.0f}  pos={b['position_error']:.3f} m  "
                f"att={b['attitude_error']:.2f} deg  success={b['success_rate']:.3f}"
            )
        return "\n".join(lines)
