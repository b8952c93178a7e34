"""Regenerate the bundled robot model file from the closed-form builder."""

import argparse

from toptime import assets
from toptime.motiondata import save_robot_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(assets.MODEL_FILE))
    ap.add_argument("--ankle-stiffness", type=float, default=assets.ANKLE_STIFFNESS)
    ap.add_argument("--ankle-damping", type=float, default=assets.ANKLE_DAMPING)
    args = ap.parse_args()
    model = assets.humanoid60(args.ankle_stiffness, args.ankle_damping)
    model.validate()
    save_robot_model(model, args.out)
    print(f"wrote {args.out}: {model.n_joints} joints, {model.total_mass:.1f} kg")


if __name__ == "__main__":
    main()
