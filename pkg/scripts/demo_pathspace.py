#!/usr/bin/env python3
"""Build sprays from curve families and check that their geodesics are the family curves."""

import numpy as np

from spraylab import pathspace
from spraylab.core import TangentState, eval_spray


def main() -> None:
    rng = np.random.default_rng(1)
    for fam in (pathspace.semicircles(), pathspace.ball_arcs(2), pathspace.circles(0.5), pathspace.cubic2d()):
        spray = pathspace.construct_spray(fam)
        states = []
        while len(states) < 3:
            x, y = rng.uniform(-0.5, 0.5, 2) + np.array([0.0, 0.6]), rng.normal(size=2)
            if spray.domain.contains(x, y):
                states.append(TangentState(x, y))
        g = eval_spray(spray, states[0])
        rep = pathspace.roundtrip_check(fam, spray, states)
        print(f"{fam.label:12s} G={np.round(g, 6)} roundtrip={rep.max_distance:.2e} radius_error={rep.radius_error:.2e}")


if __name__ == "__main__":
    main()
