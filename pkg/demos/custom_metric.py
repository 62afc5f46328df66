#!/usr/bin/env python3
"""
custom_metric.py

Define a metric in a JSON file and push it through the toolkit: load it,
build the curvature bundle, classify the chart, and produce the same JSON
report the command-line interface emits.

The example is the hyperbolic upper half-plane,

  ds^2 = (dx^2 + dy^2) / y^2   on  y in [0.5, 4],

a surface of constant curvature -1, so r = -2 everywhere and the chart is
classified constant-curvature.
"""

import json
import tempfile

from concirc import classify, curvature_bundle_at, load_metric_spec
from concirc.cli import run

SPEC = {
    "name": "half_plane",
    "dim": 2,
    "coordinates": ["x", "y"],
    "metric": [["1/y^2", "0"], ["0", "1/y^2"]],
    "domain": {"x": [-2.0, 2.0], "y": [0.5, 4.0]},
}


def main():
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(SPEC, fh)
        path = fh.name
    print(f"metric file: {path}")

    chart = load_metric_spec(path)
    bundle = curvature_bundle_at(chart)
    pts = chart.sample_points(seed=9, count=8)
    scalars = bundle.values_at(pts)["scalar"]
    print(f"scalar curvature at {len(pts)} sampled points: "
          f"min {scalars.min():.12f}, max {scalars.max():.12f}")

    verdict = classify(bundle, pts)
    print(f"classification: {verdict.verdict}")
    for key, value in sorted(verdict.evidence.items()):
        print(f"  {key} = {value:.3e}")

    print()
    print("the same run through the command-line interface:")
    rc = run(["classify", "--metric", path, "--samples", "8", "--seed", "9"])
    print(f"exit code {rc}")


if __name__ == "__main__":
    main()
