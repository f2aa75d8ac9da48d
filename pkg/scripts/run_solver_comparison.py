"""Wall time of the analytic solve against projected gradient on the same systems."""

from _common import emit, parser
from selest.bench import BenchConfig, run

p = parser(__doc__)
p.add_argument("--schedule", type=int, nargs="+", default=[10, 100, 500, 1000])
p.add_argument("--pg-max-iters", type=int, default=10_000)
args = p.parse_args()

cfg = BenchConfig(kind="solver_comparison", seed=args.seeds[0], schedule=args.schedule,
                  pg_max_iters=args.pg_max_iters, timing=True)
rows = run(cfg)
emit(rows, args.out)
for r in rows:
    print(f"n={r['n_observed']:5d} m={r['m']:5d} analytic {r['analytic_ms']:9.1f} ms  "
          f"projected gradient {r['pg_ms']:9.1f} ms ({r['pg_iterations']} iterations)")
