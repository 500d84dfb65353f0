"""Recover a low-pass coefficient from synthetic data over several seeds.

    python scripts/recover_lowpass.py --seeds 10 --a 0.85
"""

import argparse
import time
import warnings

import numpy as np

from onlinefc.model import ModelSpec, ParameterBounds, ScorePeriod
from onlinefc.synthetic import lp_recovery
from onlinefc.tuning import optimize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--a", type=float, default=0.85)
    ap.add_argument("--n", type=int, default=1500)
    ap.add_argument("--scheme", choices=("ls", "rls"), default="rls")
    args = ap.parse_args()

    model = ModelSpec(
        "y",
        {"mu": "one()", "u": "lp(u, a1=0.5)"},
        kseq=(1, 2, 3),
        regprm={"lambda": 0.99},
        bounds={"u__a1": ParameterBounds("u__a1", 0.3, 0.5, 0.9999)},
        scoreperiod=ScorePeriod(100),
    )
    est = []
    print("seed\ta1_hat\tscore\tnfev\tseconds")
    for seed in range(args.seeds):
        data = lp_recovery(n=args.n, a=args.a, seed=seed)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = optimize(model, data, fit_scheme=args.scheme)
        a_hat = res.params["u__a1"]
        est.append(a_hat)
        print(f"{seed}\t{a_hat:.4f}\t{res.score:.4f}\t{res.nfev}\t{time.perf_counter() - t0:.2f}")
    est = np.array(est)
    print(f"true {args.a}: mean {est.mean():.4f}, sd {est.std(ddof=1) if len(est) > 1 else 0:.4f}, "
          f"max |error| {np.max(np.abs(est - args.a)):.4f}")


if __name__ == "__main__":
    main()
