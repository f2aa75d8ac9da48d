"""Equal-budget comparison of the mixture against scan-based baselines."""

import numpy as np

from _common import emit, parser
from selest.bench import BenchConfig, run

p = parser(__doc__)
p.add_argument("--budget", type=int, default=100, help="parameters per method")
p.add_argument("--observed", type=int, default=100, help="observed queries")
p.add_argument("--dims", type=int, nargs="+", default=[2], help="data dimensions")
args = p.parse_args()

all_rows = []
for d in args.dims:
    cfg = BenchConfig(seeds=args.seeds, dim=d, schedule=[args.observed], budget=args.budget,
                      methods=["mixture", "mixture-clustering", "equiwidth", "sample"], timing=args.timing)
    rows = run(cfg)
    all_rows += rows
    for method in cfg.methods:
        print(f"d={d} {method:>20}: {np.mean([r.rms_error_pct for r in rows if r.method == method]):.3f}")
emit(all_rows, args.out)
