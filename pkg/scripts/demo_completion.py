#!/usr/bin/env python3
"""Complete the flat spray on the unit disc and compare with closed forms.

Prints the probed interval and the completion factor for each strategy at a
few states, next to ``(F(y) - F(-y)) / 2``.
"""

import numpy as np

from spraylab import completeness, geodesics
from spraylab.catalog import funk, named_spray


def main() -> None:
    spray = named_spray("flat_ball")
    rng = np.random.default_rng(0)
    for _ in range(4):
        x = rng.uniform(-0.6, 0.6, 2)
        y = rng.normal(size=2)
        est = geodesics.probe_maximal_interval(spray, (x, y))
        print(f"x={np.round(x, 3)} y={np.round(y, 3)} interval=({est.a:.6f}, {est.b:.6f})")
        for name, strategy in completeness.STRATEGIES.items():
            p = completeness.completion_factor(spray, (x, y), strategy)
            print(f"  {name:14s} P = {p:+.9f}")
        odd = 0.5 * (funk(x, y) - funk(x, -y))
        print(f"  (F(y)-F(-y))/2 = {odd:+.9f}")
    done = completeness.make_complete(spray, completeness.LN_TWO_SIDED)
    x, y = np.array([0.2, -0.1]), np.array([1.0, 0.4])
    print(f"{done.label}: G = {np.round(done(x, y), 9)}")


if __name__ == "__main__":
    main()
