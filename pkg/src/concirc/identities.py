"""Residual checks for the universal curvature identities.

Every check shares one pass rule: at each sample point the identity's
residual (max absolute component of the contraction that should vanish)
is compared against ``tol * (1 + scale)``, where the scale is the same
contraction evaluated with every addend replaced by its absolute value.
That makes the tolerance relative to the amount of cancellation actually
demanded, so charts with wildly different curvature magnitudes are judged
uniformly.

The curvature action (R(d_u, d_v) T for rank-4 T) is evaluated here
numerically through the derivation-property hooks, which need nothing
beyond the already-evaluated curvature arrays.  The symbolic routes in
``geometry`` stay the reference implementation; ``route="second-derivative"``
on the semisymmetry check exercises the Ricci-identity route end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CurvatureBundle, GeometryError

__all__ = [
    "HypothesisError",
    "IdentityReport",
    "KernelReport",
    "check_walker_at",
    "check_bianchi_at",
    "check_semisymmetry_at",
    "walker_lemma_kernel",
    "random_curvature_like",
]

KERNEL_RANK_THRESHOLD = 1e-10
ZERO_TENSOR_FLOOR = 1e-10


class HypothesisError(GeometryError):
    """A check was invoked on data violating its stated hypothesis."""


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of one identity check over a set of sample points."""

    identity: str
    chart: str
    points: tuple
    residuals: np.ndarray
    scales: np.ndarray
    tol: float

    @property
    def passes(self) -> np.ndarray:
        return self.residuals <= self.tol * (1.0 + self.scales)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.passes))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"{self.identity} on {self.chart}: max residual "
            f"{self.max_residual:.3e} over {len(self.points)} points [{verdict}]"
        )


@dataclass(frozen=True)
class KernelReport:
    """Kernel of the cyclic pairing map d -> sum_cyc d(.,.) B(.,.,.,.)."""

    dim: int
    kernel_dimension: int
    basis: np.ndarray
    singular_values: np.ndarray


def _per_point_max(arr: np.ndarray) -> np.ndarray:
    # collapse every axis except the leading point axis
    return np.abs(arr).reshape(arr.shape[0], -1).max(axis=1)


def _action_arrays(r13: np.ndarray, tv: np.ndarray):
    """Derivation-route action of the curvature operator on a rank-4 field.

    Returns (A, A_abs) with A[p,u,v,w,x,y,z] = (R(d_u,d_v) T)(d_w,d_x,d_y,d_z)
    and A_abs the same contraction of absolute values (cancellation scale).
    """
    hooks = (
        ("puvwm,pmxyz->puvwxyz", tv),
        ("puvxm,pwmyz->puvwxyz", tv),
        ("puvym,pwxmz->puvwxyz", tv),
        ("puvzm,pwxym->puvwxyz", tv),
    )
    acted = sum(np.einsum(spec, r13, t) for spec, t in hooks)
    scale = sum(np.einsum(spec, np.abs(r13), np.abs(t)) for spec, t in hooks)
    return -acted, scale


def check_walker_at(bundle: CurvatureBundle, points, tol: float = 1e-8) -> IdentityReport:
    """Cyclic pair sum of the curvature action on R itself.

    (R(U,V)R)(W,X,Y,Z) + (R(W,X)R)(Y,Z,U,V) + (R(Y,Z)R)(U,V,W,X) vanishes
    on every pseudo-Riemannian manifold; this must pass on any valid chart.
    """
    vals = bundle.values_at(points)
    acted, acted_abs = _action_arrays(vals["riemann_13"], vals["riemann"])
    total = (
        acted
        + np.einsum("pwxyzuv->puvwxyz", acted)
        + np.einsum("pyzuvwx->puvwxyz", acted)
    )
    scale = (
        acted_abs
        + np.einsum("pwxyzuv->puvwxyz", acted_abs)
        + np.einsum("pyzuvwx->puvwxyz", acted_abs)
    )
    return IdentityReport(
        identity="walker",
        chart=bundle.chart.name,
        points=tuple(points),
        residuals=_per_point_max(total),
        scales=_per_point_max(scale),
        tol=tol,
    )


def check_bianchi_at(
    bundle: CurvatureBundle, kind: str, points, tol: float = 1e-8
) -> IdentityReport:
    """First or second Bianchi identity residuals at the sample points.

    first:  R(W,X,Y,Z) + R(X,Y,W,Z) + R(Y,W,X,Z) = 0.
    second: (nabla_A R)(W,X,Y,Z) + (nabla_W R)(X,A,Y,Z)
            + (nabla_X R)(A,W,Y,Z) = 0.
    """
    if kind not in ("first", "second"):
        raise GeometryError(f"kind must be 'first' or 'second', got {kind!r}")
    vals = bundle.values_at(points)
    if kind == "first":
        rv = vals["riemann"]
        total = (
            rv
            + np.einsum("pxywz->pwxyz", rv)
            + np.einsum("pywxz->pwxyz", rv)
        )
        rva = np.abs(rv)
        scale = (
            rva
            + np.einsum("pxywz->pwxyz", rva)
            + np.einsum("pywxz->pwxyz", rva)
        )
    else:
        nr = bundle.field_values(bundle.nabla_riemann(), points, "nabla_riemann")
        total = (
            nr
            + np.einsum("pwxayz->pawxyz", nr)
            + np.einsum("pxawyz->pawxyz", nr)
        )
        nra = np.abs(nr)
        scale = (
            nra
            + np.einsum("pwxayz->pawxyz", nra)
            + np.einsum("pxawyz->pawxyz", nra)
        )
    return IdentityReport(
        identity=f"bianchi-{kind}",
        chart=bundle.chart.name,
        points=tuple(points),
        residuals=_per_point_max(total),
        scales=_per_point_max(scale),
        tol=tol,
    )


def check_semisymmetry_at(
    bundle: CurvatureBundle, points, tol: float = 1e-8, route: str = "derivation"
) -> IdentityReport:
    """Max component of R(U,V).R over the points; a verdict, not a theorem.

    route="derivation" contracts the curvature hooks numerically;
    route="second-derivative" evaluates the symbolic antisymmetrized
    second covariant derivative.  The two agree to rounding.
    """
    vals = bundle.values_at(points)
    acted, acted_abs = _action_arrays(vals["riemann_13"], vals["riemann"])
    if route == "derivation":
        total = acted
    elif route == "second-derivative":
        from .geometry import curvature_action_from_second_derivative

        field = curvature_action_from_second_derivative(bundle, bundle.riemann)
        total = bundle.field_values(field, points, "action2:riemann")
    else:
        raise GeometryError(
            f"route must be 'derivation' or 'second-derivative', got {route!r}"
        )
    return IdentityReport(
        identity="semisymmetry",
        chart=bundle.chart.name,
        points=tuple(points),
        residuals=_per_point_max(total),
        scales=_per_point_max(acted_abs),
        tol=tol,
    )


def _antisymmetric_basis(n: int) -> np.ndarray:
    """Basis e_(i,j) (i<j) of antisymmetric n x n arrays, shape (N, n, n)."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    basis = np.zeros((len(pairs), n, n))
    for k, (i, j) in enumerate(pairs):
        basis[k, i, j] = 1.0
        basis[k, j, i] = -1.0
    return basis


def walker_lemma_kernel(dim: int, bvals: np.ndarray) -> KernelReport:
    """Kernel of d -> d(U,V)B(W,X,Y,Z) + d(W,X)B(Y,Z,U,V) + d(Y,Z)B(U,V,W,X).

    d ranges over antisymmetric 2-index arrays; B is a fixed rank-4 array
    with curvature-like pair structure.  For B != 0 the expected kernel is
    {0}: no nonzero antisymmetric form can pair with a nonzero curvature-like
    tensor to a vanishing cyclic sum.

    Rank is decided by singular values above 1e-10 times the largest one.
    Raises HypothesisError when B vanishes (the lemma assumes B != 0).
    """
    b = np.asarray(bvals, dtype=float)
    if b.shape != (dim,) * 4:
        raise GeometryError(f"B must have shape {(dim,) * 4}, got {b.shape}")
    bmax = float(np.max(np.abs(b)))
    if bmax <= ZERO_TENSOR_FLOOR:
        raise HypothesisError(
            "walker lemma assumes a nonvanishing tensor; max |B| = "
            f"{bmax:.3e} is below {ZERO_TENSOR_FLOOR:.0e}"
        )
    basis = _antisymmetric_basis(dim)
    images = (
        np.einsum("kuv,wxyz->kuvwxyz", basis, b)
        + np.einsum("kwx,yzuv->kuvwxyz", basis, b)
        + np.einsum("kyz,uvwx->kuvwxyz", basis, b)
    )
    matrix = images.reshape(len(basis), -1).T  # map matrix, columns = basis images
    _, s, vt = np.linalg.svd(matrix, full_matrices=False)
    rank = int(np.sum(s > KERNEL_RANK_THRESHOLD * s[0]))
    kdim = len(basis) - rank
    if kdim:
        kernel_vecs = vt[rank:]
        kernel_basis = np.einsum("qk,kuv->quv", kernel_vecs, basis)
    else:
        kernel_basis = np.zeros((0, dim, dim))
    return KernelReport(
        dim=dim,
        kernel_dimension=kdim,
        basis=kernel_basis,
        singular_values=s,
    )


def random_curvature_like(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random rank-4 array with the full algebraic curvature symmetries.

    Antisymmetric in each index pair, symmetric under pair swap, and with
    the cyclic (first Bianchi) part projected out.
    """
    t = rng.standard_normal((dim,) * 4)
    t = t - np.einsum("wxyz->xwyz", t)
    t = t - np.einsum("wxyz->wxzy", t)
    t = t + np.einsum("wxyz->yzwx", t)
    # remove the cyclic part; on pair-(anti)symmetric arrays the cyclic sum
    # operator satisfies c(c(t)) = 3 c(t), so t - c(t)/3 is Bianchi-flat
    cyc = t + np.einsum("wxyz->xywz", t) + np.einsum("wxyz->ywxz", t)
    return t - cyc / 3.0
