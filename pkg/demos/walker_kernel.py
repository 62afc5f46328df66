#!/usr/bin/env python3
"""
walker_kernel.py

The lemma behind the recurrence implication: if B is a nonzero tensor with
the symmetries of a curvature tensor, the only 2-form d with

  d(X,Y) B(Z,W,U,V) + d(Z,W) B(X,Y,U,V) + d(U,V) B(Z,W,X,Y) = 0

is d = 0.  Numerically: assemble the linear map d -> cyclic sum on the
antisymmetric-pair basis and confirm a trivial kernel via SVD.  The script
samples random curvature-like tensors in dims 3..5, then shows the kernel
of the map for an actual curvature tensor, and finally that a zero B is
rejected (the lemma has nothing to say about it).
"""

import numpy as np

from concirc import (
    HypothesisError,
    curvature_bundle_at,
    get_builtin,
    random_curvature_like,
    walker_lemma_kernel,
)


def main():
    rng = np.random.default_rng(2024)
    print("random curvature-like tensors:")
    for dim in (3, 4, 5):
        dims = []
        gaps = []
        for _ in range(25):
            b = random_curvature_like(rng, dim)
            rep = walker_lemma_kernel(dim, b)
            dims.append(rep.kernel_dimension)
            sv = rep.singular_values
            gaps.append(float(sv[-1] / sv[0]))
        print(f"  dim {dim}: kernel dimensions {sorted(set(dims))}, "
              f"smallest/largest singular value ratio >= {min(gaps):.2e}")

    print()
    print("curvature tensor of sphere_3 at a sampled point:")
    bundle = curvature_bundle_at(get_builtin("sphere_3").chart)
    pts = bundle.chart.sample_points(3, 1)
    rvals = bundle.values_at(pts)["riemann"][0]
    rep = walker_lemma_kernel(3, rvals)
    print(f"  kernel dimension {rep.kernel_dimension}, "
          f"singular values {np.array2string(rep.singular_values, precision=2)}")

    print()
    print("zero tensor:")
    try:
        walker_lemma_kernel(3, np.zeros((3, 3, 3, 3)))
    except HypothesisError as err:
        print(f"  rejected as expected: {err}")


if __name__ == "__main__":
    main()
