"""Combine five interval predictions with the split normal mixture and with SEM.

Run with:
    python3 demos/aggregation.py

Demonstrates:
- SEM: mean bounds shifted outward by 1.96 standard errors
- SNM: one split normal per member, averaged, with bounds read off the mixture
- how member disagreement widens each method
"""

from snmqd.ensemble import aggregate_sem, aggregate_snm
from snmqd.metrics import IntervalPrediction


def report(title, members):
    snm = aggregate_snm(members)
    sem = aggregate_sem(members, "impl")
    sem_paper = aggregate_sem(members, "paper")
    print(title)
    for m in members:
        print(f"    member  [{m.lower:+.2f}, {m.upper:+.2f}]  point {m.point:+.2f}")
    for name, r in (("SNM", snm), ("SEM", sem), ("SEM (std, no 1/sqrt(m))", sem_paper)):
        print(f"  {name:<24} [{r.lower:+.3f}, {r.upper:+.3f}]  width {r.upper - r.lower:.3f}")
    print()


def main():
    report("Members that agree:", [IntervalPrediction(-1.0 + d, 0.0 + d, 1.2 + d) for d in (-0.05, 0.0, 0.02, 0.04, 0.06)])
    report("One member shifted down:", [IntervalPrediction(-1.0, 0.0, 1.2)] * 4 + [IntervalPrediction(-3.0, -2.0, -0.8)])


if __name__ == "__main__":
    main()
