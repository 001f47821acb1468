"""Regenerate the frozen CSV inputs under tests/data/.

The metrics rows plant a positive ethnicity-diversity effect and a negative
ranking effect on citations; correlations.csv carries the matching Pearson
statistics so annotation and slope-sign checks line up.

    python3 tests/gen_data.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

DATA = Path(__file__).parent / "data"


def pearson_with_p(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    r = float(np.corrcoef(x, y)[0, 1])
    n = len(x)
    t_sq = (n - 2) * r * r / (1.0 - r * r)
    from scipy import stats
    p = float(2 * stats.t.sf(math.sqrt(t_sq), n - 2))
    return r, p


def main() -> None:
    DATA.mkdir(exist_ok=True)
    rng = np.random.default_rng(99)
    rows = []
    for source, n in (("real2010", 60), ("simulated", 80)):
        d_eth = rng.uniform(0, 1.4, size=n)
        d_aff = rng.uniform(0, 1.4, size=n)
        rank = rng.uniform(1, 100, size=n)
        noise = rng.normal(0, 6, size=n)
        citations = np.clip(30 + 25 * d_eth + 8 * d_aff - 0.25 * rank + noise, 0, None)
        for i in range(n):
            rows.append((f"{source[:3]}{i:03d}", float(d_eth[i]), float(d_aff[i]),
                         float(rank[i]), int(round(citations[i])), source))

    with (DATA / "metrics_golden.csv").open("w", encoding="utf-8") as fh:
        fh.write("paper_id,d_eth,d_aff,mean_rank,citations,source\n")
        for pid, de, da, mr, c, src in rows:
            fh.write(f"{pid},{de!r},{da!r},{mr!r},{c},{src}\n")

    with (DATA / "correlations_golden.csv").open("w", encoding="utf-8") as fh:
        fh.write("factor,r,p_value,n\n")
        for source in ("real2010", "simulated"):
            subset = [r for r in rows if r[5] == source]
            cits = np.asarray([r[4] for r in subset], dtype=float)
            for idx, factor in ((1, "d_eth"), (2, "d_aff"), (3, "mean_rank")):
                vals = np.asarray([r[idx] for r in subset], dtype=float)
                r_val, p_val = pearson_with_p(vals, cits)
                fh.write(f"{source}:{factor},{r_val!r},{p_val!r},{len(subset)}\n")

    # Geometric counts: an exactly log-linear histogram with rate ln 2.
    hist = {1: 1024, 2: 512, 3: 256, 4: 128, 5: 64}
    with (DATA / "team_sizes_golden.csv").open("w", encoding="utf-8") as fh:
        fh.write("size,count\n")
        for size, count in hist.items():
            fh.write(f"{size},{count}\n")
    (DATA / "team_size_fit_golden.json").write_text(
        json.dumps({"rate": math.log(2), "r_squared": 1.0}), encoding="utf-8"
    )

    # Degenerate single-bin variant for the failure path.
    with (DATA / "team_sizes_single.csv").open("w", encoding="utf-8") as fh:
        fh.write("size,count\n3,17\n")
    (DATA / "team_size_fit_single.json").write_text("null", encoding="utf-8")

    print("frozen analysis fixtures under", DATA)


if __name__ == "__main__":
    main()
