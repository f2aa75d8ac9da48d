"""Windowed error under jump, sliding and unshifted query streams."""

import numpy as np

from _common import emit, parser
from selest.bench import BenchConfig, run

p = parser(__doc__)
p.add_argument("--shift", choices=["jump", "sliding_shift", "no_shift"], default="jump")
p.add_argument("--regions", nargs="+", default=["[0.0,0.5]x[0.0,0.5]", "[0.5,1.0]x[0.5,1.0]"],
               help="jump regions, in visiting order")
p.add_argument("--per-region", type=int, default=100, help="queries per region (stream length otherwise)")
p.add_argument("--window", type=int, default=10)
args = p.parse_args()

cfg = BenchConfig(kind="workload_shift", shift=args.shift, seeds=args.seeds, jump_regions=args.regions,
                  per_region=args.per_region, window=args.window, timing=args.timing)
rows = run(cfg)
emit(rows, args.out)
windows = sorted({r.extra["window"] for r in rows})
for w in windows:
    e = np.mean([r.rms_error_pct for r in rows if r.extra["window"] == w])
    print(f"window {w:3d}: {e:.3f}")
