"""Small hand-built models for analytic checks."""

import numpy as np

from toptime.motiondata import (Actuator, AnkleCompliance, EndEffector, Joint, LinkInertial, RobotModel)

SQUARE = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0.0]])


def toy_model(joints, links, base_mass=1.0, base_com=(0, 0, 0), base_inertia=(1.0, 1.0, 1.0),
              base_position=(0, 0, 0), ankle=(0.0, 0.0, 0.0), J=1.0, ee=None):
    """``joints``: list of (parent, axis, origin); ``links``: list of (mass, com, inertia)."""
    js = [Joint(p, np.asarray(a, float), np.asarray(o, float)) for p, a, o in joints]
    ls = [LinkInertial(m, np.asarray(c, float), I) for m, c, I in links]
    acts = [Actuator(100.0, 4.0, 120.0, J) for _ in js]
    ees = [EndEffector(len(js) - 1, np.zeros(3), "tip")] if ee is None else ee
    return RobotModel(js, ls, acts, base_mass, np.asarray(base_com, float), np.asarray(base_inertia, float),
                      np.asarray(base_position, float), AnkleCompliance(*ankle), SQUARE.copy(), ees, "toy")
