"""Steps needed by RLS to settle within 10% of a new coefficient, per forgetting factor.

    python scripts/tracking.py
"""

import numpy as np

from onlinefc.model import ModelSpec
from onlinefc.regression import rls_fit
from onlinefc.synthetic import step_change


def settle(trace, target, tol=0.1):
    within = np.abs(trace - target) <= tol * abs(target)
    return next((i for i in range(len(within)) if within[i:].all()), None)


def main():
    print("lambda\t1/(1-lambda)\tsteps (median over 10 seeds)")
    for lam in (0.9, 0.95, 0.98, 0.99):
        steps = []
        for seed in range(10):
            data = step_change(1200, seed=seed)
            model = ModelSpec("y", {"mu": "one()", "u": "u"}, regprm={"lambda": lam})
            trace = rls_fit(None, model, data).coefficients[600:, 0, 1]
            steps.append(settle(trace, 4.0))
        print(f"{lam}\t{1 / (1 - lam):.0f}\t{np.median(steps):.0f}")


if __name__ == "__main__":
    main()
