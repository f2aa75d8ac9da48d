"""Query-driven mixture against periodically rebuilt scan statistics while data drifts."""

import numpy as np

from _common import emit, parser
from selest.bench import BenchConfig, run

p = parser(__doc__)
p.add_argument("--batches", type=int, default=10)
p.add_argument("--batch", type=int, default=100)
p.add_argument("--insert-rows", type=int, default=2000)
args = p.parse_args()

cfg = BenchConfig(kind="scan_comparison", seeds=args.seeds, batches=args.batches, batch=args.batch,
                  insert_rows=args.insert_rows, methods=["mixture", "equiwidth", "sample"], timing=args.timing)
rows = run(cfg)
emit(rows, args.out)
for b in range(args.batches):
    line = "  ".join(
        f"{m} {np.mean([r.rms_error_pct for r in rows if r.method == m and r.extra['batch'] == b]):.2f}"
        for m in cfg.methods)
    print(f"batch {b}: {line}")
