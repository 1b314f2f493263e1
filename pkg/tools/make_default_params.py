"""Regenerate src/hybridfinger/data/default_params.yaml.

Link vectors are design choices sized to a ~95 mm finger; rod lengths are
computed from them so that M = 0 closes every loop at Q = 0.  Both
bell-crank pivots (A, and B at home) sit on the abduction axis, so pure
abduction at M2 = M3 = 0 leaves the flexion joints untouched.  Motor limits
enclose the image of the joint-limit box.
"""
import sys
from pathlib import Path

import numpy as np
import yaml

V = {
    "OA": [0.0, 8.0, 0.0],
    "AB": [0.0, -8.0, 0.0],
    "AC": [0.0, -5.9688, -3.6569],
    "AD": [0.0, 0.0, 45.0],
    "DF": [0.0, 4.26, -2.61],
    "DG": [0.0, -6.0, 24.0],
    "GH": [0.0, 4.0, 0.0],
    "DE": [0.0, -4.0, 0.0],
    "P2": [0.0, 8.0, -30.0],
    "P3": [0.0, 0.0, -32.0],
}
GI_Z = 22.0

JOINT_LIMITS = {
    "q1": [-0.36, 0.36],
    "q2": [-0.45, 1.05],
    "q3": [-0.08, 1.45],
    "q4": [-0.12, 1.45],
    "beta": [-1.0, 0.1],
}
MOTOR_LIMITS = {"m1_rad": [-0.35, 0.35], "m2_mm": [-3.5, 7.5], "m3_mm": [-1.0, 8.0]}


def build():
    v = {k: np.array(x) for k, x in V.items()}
    doc = {f"{k}_mm": list(map(float, x)) for k, x in V.items()}
    doc["l2_mm"] = float(np.linalg.norm(v["P2"] - v["OA"]))
    doc["l3_mm"] = float(np.linalg.norm(v["P3"] - v["OA"] - v["AB"]))
    doc["l4_mm"] = float(np.linalg.norm(-v["AC"] + v["AD"] + v["DF"]))
    doc["l5_mm"] = float(np.linalg.norm(v["DG"] + v["GH"] - v["DE"]))
    od = v["OA"] + v["AD"]
    doc["OD_y_mm"], doc["OD_z_mm"] = float(od[1]), float(od[2])
    doc["DG_y_mm"], doc["DG_z_mm"] = float(v["DG"][1]), float(v["DG"][2])
    doc["GI_z_mm"] = GI_Z
    doc["beta_offset_rad"] = 0.0
    doc["joint_limits_rad"] = JOINT_LIMITS
    doc["motor_limits"] = MOTOR_LIMITS
    doc["v_max_m1_rad_s"] = 2.0
    doc["v_max_m2_mm_s"] = 15.0
    doc["v_max_m3_mm_s"] = 15.0
    return doc


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src/hybridfinger/data/default_params.yaml"
    header = (
        "# Default finger geometry. Vectors in mm at the zero configuration,\n"
        "# each in the frame of the link it is fixed to. Rod lengths close\n"
        "# every loop at M = 0, Q = 0. Regenerate with tools/make_default_params.py.\n"
    )
    text = header + yaml.safe_dump(build(), sort_keys=False, default_flow_style=None)
    if "--print" in sys.argv:
        print(text)
    else:
        out.write_text(text)
