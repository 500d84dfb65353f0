"""Forward selection on synthetic data: input recovery and harmonic count.

    python scripts/selection_study.py --seeds 20
"""

import argparse
from collections import Counter

from onlinefc.model import ModelSpec, ParameterBounds, ScorePeriod
from onlinefc.selection import step_selection
from onlinefc.synthetic import harmonic_case, selection_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    full = ModelSpec("y", {"mu": "one()", "u1": "u1", "u2": "u2"}, kseq=(1, 2),
                     regprm={"lambda": 0.999}, scoreperiod=ScorePeriod(50))
    picked = Counter()
    for seed in range(args.seeds):
        res = step_selection(full.replace(inputs={"mu": "one()"}), full, selection_case(seed=seed),
                             "forward", threads=args.threads)
        picked[",".join(sorted(res.model.inputs))] += 1
    print("inputs selected (true: mu,u1):")
    for subset, count in picked.most_common():
        print(f"  {subset:12s} {count}/{args.seeds}")

    b = ParameterBounds("I__nharmonics", 1, 1, 6, integer=True)
    model = ModelSpec("y", {"mu": "one()", "I": "fs(tod, nharmonics=1)"}, regprm={"lambda": 0.999},
                      bounds={"I__nharmonics": b}, scoreperiod=ScorePeriod(100))
    counts = Counter()
    for seed in range(min(args.seeds, 10)):
        res = step_selection(model, model, harmonic_case(nharm=3, seed=seed), "forward")
        counts[res.model.prm["I__nharmonics"]] += 1
    print("nharmonics selected (true: 3):", dict(sorted(counts.items())))


if __name__ == "__main__":
    main()
