"""Error versus number of observed queries on 2-d Gaussian data, for every method."""

import numpy as np

from _common import emit, parser
from selest.bench import BenchConfig, run

p = parser(__doc__)
p.add_argument("--schedule", type=int, nargs="+", default=[10, 20, 50, 100, 200, 500, 1000])
p.add_argument("--correlation", type=float, default=0.5)
p.add_argument("--methods", nargs="+", default=["mixture", "mixture-clustering", "equiwidth", "sample"])
args = p.parse_args()

cfg = BenchConfig(seeds=args.seeds, schedule=args.schedule, correlation=args.correlation,
                  methods=args.methods, timing=args.timing)
rows = run(cfg)
emit(rows, args.out)
for method in args.methods:
    curve = [np.mean([r.rms_error_pct for r in rows if r.method == method and r.n_observed == n])
             for n in args.schedule]
    print(f"{method:>20}: " + "  ".join(f"{n}:{e:.2f}" for n, e in zip(args.schedule, curve)))
