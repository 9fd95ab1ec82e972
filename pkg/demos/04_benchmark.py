"""
FRIS against the baselines
==========================

All schemes see the same drops. The HD schemes split time between the two
directions, so their sum rate carries a factor one half.
"""

from ris_fd_opt import experiments as ex

exp = ex.Experiment({"drops": 6, "seed": 3})
rows = [ex.benchmark_drop((exp.raw, i)) for i in range(exp.drops)]
summary = ex.benchmark_summary(rows)

for scheme, mean in summary["means"].items():
    print(f"{scheme:>14}: {mean:.3f} bit/s/Hz")
for name, test in summary["sign_tests"].items():
    print(f"FRIS vs {name:>12}: {test['wins']} wins, {test['losses']} losses, p = {test['p_value']:.3f}")
for name, value in summary["improvements"].items():
    print(f"{name}: {100 * value:+.1f}%")
