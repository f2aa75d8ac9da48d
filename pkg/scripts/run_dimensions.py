"""Mixture and equiwidth error as the data dimension grows."""

import numpy as np

from _common import emit, parser
from selest.bench import BenchConfig, run

p = parser(__doc__)
p.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5, 6, 8, 10])
p.add_argument("--observed", type=int, default=100)
p.add_argument("--budget", type=int, default=100)
args = p.parse_args()

all_rows = []
for d in args.dims:
    cfg = BenchConfig(seeds=args.seeds, dim=d, schedule=[args.observed], budget=args.budget,
                      methods=["mixture", "equiwidth"], timing=args.timing)
    rows = run(cfg)
    all_rows += rows
    mix = np.mean([r.rms_error_pct for r in rows if r.method == "mixture"])
    ew = np.mean([r.rms_error_pct for r in rows if r.method == "equiwidth"])
    print(f"d={d:2d} mixture {mix:.3f} equiwidth {ew:.3f}")
emit(all_rows, args.out)
