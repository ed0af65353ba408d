# PEP-8
from flight.harness.bench import bench_render
from flight.management.base import GapCommand


class Command(GapCommand):
    help = "Time the culled renderer against brute force and check they agree."

    def add_run_arguments(self, parser):
        parser.add_argument("--frames", type=int, default=100)

    def run(self, run, out_dir, options):
        result = bench_render(run, run.seed, options["frames"])
        self.summary(out_dir, "bench", result.as_dict())
        if result.mismatches:
            raise RuntimeError(f"{result.mismatches} of {result.frames} frames differ from brute force")
        return (f"{result.frames} frames  culled {result.culled_seconds:.3f} s  "
                f"brute {result.brute_seconds:.3f} s  speedup {result.speedup:.2f}x")
