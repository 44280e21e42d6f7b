"""Where the active learner takes its labels from, and what the weights fix.

Two uniform classes on [-1, 1] split at x=0. The biased-coin selection
concentrates labels near the boundary, so the raw density of the selected
examples is peaked in the middle, and more so for a smaller c0. The
importance weights (1/p) undo the bias: the weighted density is flat again,
matching the true distribution.

Runs in a few seconds (150 passes per c0); raise RUNS for smoother output.
"""

from reuselab import DatasetSpec, density_histogram

RUNS = 150
SWEEP = (1.0, 10.0)

rows = density_histogram(
    DatasetSpec(kind="uniform-line", n=1000),
    c0_list=SWEEP, runs=RUNS, bins=10, base_seed=7,
)

for c0 in SWEEP:
    sub = [r for r in rows if r.c0 == c0]
    print(f"\nc0={c0} (deciles of [-1, 1], {RUNS} runs)")
    print(f"{'bin':>12} {'raw density':>12} {'weighted':>10}")
    for r in sub:
        bar = "#" * int(round(r.unweighted_mass * 100))
        print(f"[{r.lo:+.1f},{r.hi:+.1f}) {r.unweighted_mass:12.3f} {r.weighted_mass:10.3f}  {bar}")
    central = sub[4].unweighted_mass + sub[5].unweighted_mass
    edges = sub[0].unweighted_mass + sub[9].unweighted_mass
    print(f"central-two vs edge-two raw mass: {central:.3f} vs {edges:.3f}")
