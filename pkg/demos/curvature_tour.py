#!/usr/bin/env python3
"""
curvature_tour.py

Walk through the curvature apparatus on two round spheres:

  sphere_2  ds^2 = d(theta)^2 + sin(theta)^2 d(phi)^2
  sphere_3  the unit 3-sphere in hyperspherical coordinates

For each chart the bundle holds symbolic Christoffel symbols, the (0,4)
curvature tensor R, the Ricci tensor, the scalar curvature r, the metric
curvature-like tensor G, and the concircular tensor

  C = R - (r / (n(n-1))) G.

On a unit sphere R = G exactly, so C collapses to zero: structurally in
dim 2 (the simplifier cancels it term by term) and numerically in dim 3.
"""

import numpy as np

import concirc.expressions as ex
from concirc import curvature_bundle_at, get_builtin


def show_christoffel(bundle):
    coords = bundle.chart.coordinates
    n = bundle.chart.n
    shown = 0
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                g = bundle.christoffel[k, i, j]
                if g is not ex.ZERO:
                    print(f"  Gamma^{coords[k]}_{coords[i]}{coords[j]} = {ex.to_string(g)}")
                    shown += 1
    if shown == 0:
        print("  all Christoffel symbols vanish")


def main():
    print("== sphere_2 (symbolic) ==")
    b2 = curvature_bundle_at(get_builtin("sphere_2").chart)
    print("nonzero Christoffel symbols:")
    show_christoffel(b2)
    print(f"scalar curvature r = {ex.to_string(b2.scalar_curvature)}")
    zero = all(c is ex.ZERO for c in b2.concircular.components.ravel())
    print(f"concircular tensor C identically zero: {zero}")

    print()
    print("== sphere_3 (numeric at sampled points) ==")
    b3 = curvature_bundle_at(get_builtin("sphere_3").chart)
    pts = b3.chart.sample_points(seed=7, count=5)
    vals = b3.values_at(pts)
    for i, p in enumerate(pts):
        coords = ", ".join(f"{k}={v:.3f}" for k, v in sorted(p.items()))
        r = vals["scalar"][i]
        cmax = np.max(np.abs(vals["concircular"][i]))
        rg = np.max(np.abs(vals["riemann"][i] - vals["gtensor"][i]))
        print(f"point {i} ({coords}): r = {r:.12f}  max|C| = {cmax:.2e}  max|R - G| = {rg:.2e}")
    print("r is the constant n(n-1) = 6 and R = G, so the sphere has constant curvature 1")


if __name__ == "__main__":
    main()
