from hypothesis import strategies as st

from spatialtok.spatial import (COLORS, SHAPES, ActionPlan, ActionStep, HierCoord,
                                SceneObject)

hier = st.builds(HierCoord, st.integers(0, 24), st.integers(0, 24),
                 st.integers(0, 3), st.integers(0, 3))

angle = st.integers(0, 120)

steps = st.builds(ActionStep, hier, st.integers(0, 120), angle, angle, angle,
                  st.integers(0, 1))

plans = st.lists(steps, min_size=1, max_size=12).map(lambda s: ActionPlan(tuple(s)))


@st.composite
def object_lists(draw, max_size=7):
    n = draw(st.integers(0, max_size))
    return tuple(SceneObject(i, draw(st.sampled_from(COLORS)), draw(st.sampled_from(SHAPES)),
                             draw(st.integers(1, 30)), draw(hier)) for i in range(n))
