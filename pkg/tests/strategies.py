import numpy as np
from hypothesis import strategies as st

from spraylab.core import TangentState

coord = st.floats(-1.0, 1.0, allow_nan=False)
speed = st.floats(0.1, 3.0)


@st.composite
def ball_states(draw, n=2, radius=0.85):
    x = np.array([draw(coord) for _ in range(n)])
    r = np.linalg.norm(x)
    if r > radius:
        x *= radius / r
    y = np.array([draw(coord) for _ in range(n)])
    if np.linalg.norm(y) < 1e-3:
        y[0] = 1.0
    return TangentState(x, y)


@st.composite
def half_plane_states(draw):
    x = np.array([draw(st.floats(-2.0, 2.0)), draw(st.floats(0.1, 2.0))])
    y = np.array([draw(coord), draw(coord)])
    if abs(y[0]) < 1e-2:
        y[0] = 0.5
    return TangentState(x, y)


lambdas = st.floats(0.1, 10.0)
