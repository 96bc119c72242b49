"""Marker positions of the bundled model at q = 0, computed from the model file alone.

At q = 0 every joint frame is parallel to the root frame, so a marker sits at the
sum of the scaled joint offsets along its chain plus its own scaled offset.

Regenerate with: python3 tests/oracles/rest_pose.py > tests/data/rest_pose.json
"""
import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[2]

CASES = {
    "unit": ({}, 1.0),
    "scaled": ({"head": 1.05, "torso": 0.95, "upper_leg": 1.1, "lower_leg": 0.9, "foot": 1.2,
                "upper_arm": 0.8, "forearm": 1.15, "hand": 1.0}, 1.3),
}


def main():
    model = json.loads((ROOT / "data" / "infant_skeleton.json").read_text())
    segs = {s["name"]: s for s in model["segments"]}
    for s in model["segments"]:
        for d in s.get("dofs", []):
            lo, hi = d["limits_deg"]
            assert lo <= 0.0 <= hi, d["name"]

    out = {"cases": []}
    for name, (groups, overall) in CASES.items():
        def eff(seg):
            g = segs[seg]["scale_group"]
            return overall if g == "none" else overall * groups.get(g, 1.0)

        def joint(seg):
            s = segs[seg]
            if s["parent"] is None:
                return [0.0, 0.0, 0.0]
            p = joint(s["parent"])
            k = eff(s["parent"])
            return [p[i] + k * s["offset"][i] for i in range(3)]

        markers = {}
        for m in model["markers"]:
            j = joint(m["segment"])
            k = eff(m["segment"])
            markers[m["name"]] = [j[i] + k * m["offset"][i] for i in range(3)]
        out["cases"].append({"name": name, "groups": groups, "overall": overall, "markers": markers})
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
