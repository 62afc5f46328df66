"""Metric charts, tensor fields, and the curvature apparatus.

Index conventions (fixed; all tests are written against them):

* ``christoffel[k, i, j]`` is Gamma^k_ij of the Levi-Civita connection,
  Gamma^k_ij = (1/2) g^kl (d_i g_jl + d_j g_il - d_l g_ij).
* The curvature operator is R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y];
  ``riemann_13[i, j, k, l]`` is the coefficient of d_l in R(d_i, d_j) d_k.
* The (0,4) curvature is R(W,X,Y,Z) = g(R(W,X)Y, Z), stored with slots in
  that order: ``riemann[w, x, y, z]``.
* Ricci is the trace S(Y,Z) = trace(X -> R(X,Y)Z), i.e.
  ``ricci[j, k] = riemann_13[i, j, k, i]`` summed over i; the scalar
  curvature is r = g^jk S_jk. With these conventions a constant-curvature
  metric of sectional curvature K satisfies R = K*G, S = (n-1)K*g,
  r = n(n-1)K, where G is the curvature-like tensor of the metric:
  G(W,X,Y,Z) = g(X,Y) g(W,Z) - g(W,Y) g(X,Z).
* The concircular tensor is C = R - (r / (n(n-1))) * G.
* Covariant derivatives put the new (derivative) index FIRST:
  ``(nabla T)[a, i1, ..., ik]``; the second covariant derivative is the
  covariant derivative of the first, so slot order is (a, b, i1, ..., ik)
  and nabla^2_{a,b} = nabla_a nabla_b - nabla_{nabla_a b}.
* The exterior derivative of a 1-form and the wedge of two 1-forms carry
  the 1/2 normalization: (d w)(U,V) = ((nabla_U w)(V) - (nabla_V w)(U)) / 2
  and (m ^ l)(U,V) = (m(U) l(V) - m(V) l(U)) / 2.

All tensor components are symbolic expressions; numeric work happens by
evaluating component arrays at sample points and contracting with numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expressions as ex
from .expressions import Expr, simplify, differentiate

__all__ = [
    "GeometryError",
    "SingularMetricError",
    "ResourceLimitError",
    "MetricChart",
    "TensorField",
    "CurvatureBundle",
    "christoffel_at",
    "curvature_bundle_at",
    "covariant_derivative_at",
    "curvature_action_at",
    "curvature_action_from_second_derivative",
    "exterior_derivative_one_form_at",
    "wedge_two_one_forms_at",
    "metric_determinant",
    "points_to_columns",
]

EXCLUSION_MARGIN = 1e-3
DEGENERACY_FLOOR = 1e-12
COMPONENT_NODE_LIMIT = 2_000_000


class GeometryError(Exception):
    """Base class for chart and curvature pipeline errors."""


class SingularMetricError(GeometryError):
    """Metric determinant vanished (numerically) at an admitted point."""

    def __init__(self, chart_name: str, point: dict, det: float):
        coords = ", ".join(f"{k}={v:.6g}" for k, v in point.items())
        super().__init__(
            f"metric '{chart_name}' is degenerate at ({coords}): |det g| = {abs(det):.3e}"
        )
        self.point = dict(point)
        self.det = det


class ResourceLimitError(GeometryError):
    """A simplified component grew past the node budget."""

    def __init__(self, what: str, index: tuple, count: int):
        super().__init__(
            f"simplification blow-up in {what}{list(index)}: {count}+ distinct nodes"
        )
        self.what = what
        self.index = index


def _object_array(shape) -> np.ndarray:
    return np.empty(shape, dtype=object)


def points_to_columns(points, coordinates) -> dict:
    """Turn a list of point dicts into coordinate-name -> column-array."""
    return {c: np.array([float(p[c]) for p in points]) for c in coordinates}


@dataclass(frozen=True)
class MetricChart:
    """A coordinate chart with a symbolic metric and a sampling box.

    ``metric`` is an (n, n) object array of expressions; it must be
    structurally symmetric after simplification. ``domain`` maps every
    coordinate to a (lo, hi) interval and ``exclusions`` lists expressions
    whose near-zero loci are rejected during sampling.
    """

    name: str
    coordinates: tuple
    metric: np.ndarray
    domain: dict
    exclusions: tuple = ()

    def __post_init__(self):
        n = len(self.coordinates)
        if n < 2:
            raise GeometryError(f"chart '{self.name}': need at least 2 coordinates, got {n}")
        if self.metric.shape != (n, n):
            raise GeometryError(
                f"chart '{self.name}': metric shape {self.metric.shape} != ({n}, {n})"
            )
        simplified = _object_array((n, n))
        declared = frozenset(self.coordinates)
        for i in range(n):
            for j in range(n):
                g = simplify(ex._coerce(self.metric[i, j]))
                loose = ex.variables(g) - declared
                if loose:
                    raise GeometryError(
                        f"chart '{self.name}': metric[{i}][{j}] uses undeclared "
                        f"variable(s) {sorted(loose)}"
                    )
                simplified[i, j] = g
        for i in range(n):
            for j in range(i + 1, n):
                if simplified[i, j] is not simplified[j, i]:
                    raise GeometryError(
                        f"chart '{self.name}': metric is not symmetric at "
                        f"[{i}][{j}] vs [{j}][{i}]"
                    )
        object.__setattr__(self, "metric", simplified)
        missing = [c for c in self.coordinates if c not in self.domain]
        if missing:
            raise GeometryError(f"chart '{self.name}': no domain interval for {missing}")
        for c in self.coordinates:
            lo, hi = self.domain[c]
            if not lo < hi:
                raise GeometryError(f"chart '{self.name}': empty interval for '{c}'")

    @property
    def n(self) -> int:
        return len(self.coordinates)

    def sample_points(self, seed, count: int) -> list:
        """Draw `count` admitted points, uniform over the box.

        Points within EXCLUSION_MARGIN of an exclusion locus are rejected and
        redrawn; an admitted point with |det g| <= DEGENERACY_FLOOR raises
        SingularMetricError. All randomness flows from the given seed.
        """
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        det = metric_determinant(self.metric)
        points = []
        attempts = 0
        while len(points) < count:
            attempts += 1
            if attempts > 1000 * count:
                raise GeometryError(
                    f"chart '{self.name}': sampling rejected too many points; "
                    "exclusion loci may fill the box"
                )
            p = {
                c: float(rng.uniform(self.domain[c][0], self.domain[c][1]))
                for c in self.coordinates
            }
            if any(abs(ex.evaluate(excl, p)) < EXCLUSION_MARGIN for excl in self.exclusions):
                continue
            d = ex.evaluate(det, p)
            if abs(d) <= DEGENERACY_FLOOR:
                raise SingularMetricError(self.name, p, d)
            points.append(p)
        return points


@dataclass(frozen=True)
class TensorField:
    """All-lower-index tensor field: an object array of expressions.

    symmetry is a declared tag ("none", "symmetric-2", "antisymmetric-2",
    "riemann-like"); it is what the identity tests verify numerically.
    """

    dim: int
    rank: int
    components: np.ndarray
    symmetry: str = "none"

    def __post_init__(self):
        expected = (self.dim,) * self.rank
        if self.components.shape != expected:
            raise GeometryError(
                f"tensor components shape {self.components.shape} != {expected}"
            )

    def evaluate(self, point: dict) -> np.ndarray:
        flat = [ex.evaluate(c, point) for c in self.components.ravel()]
        return np.array(flat, dtype=float).reshape(self.components.shape)

    def evaluate_block(self, points) -> np.ndarray:
        """Evaluate at many points at once; returns shape (npoints, dim^rank...)."""
        points = list(points)
        if not points:
            return np.zeros((0,) + self.components.shape)
        # all point coordinates, not just the ones appearing in components,
        # so constant fields still broadcast to the right number of rows
        columns = points_to_columns(points, sorted(points[0]))
        cols = ex.evaluate_block(list(self.components.ravel()), columns)
        block = np.stack(cols, axis=-1)  # (npoints, ncomponents)
        return block.reshape((len(points),) + self.components.shape)


def metric_determinant(g: np.ndarray) -> Expr:
    """Symbolic determinant by minor expansion (dimensions here are small)."""
    n = g.shape[0]
    if n == 1:
        return g[0, 0]
    total = ex.ZERO
    for j in range(n):
        minor = np.delete(np.delete(g, 0, axis=0), j, axis=1)
        term = ex.mul(g[0, j], metric_determinant(minor))
        total = ex.add(total, term) if j % 2 == 0 else ex.sub(total, term)
    return simplify(total)


def _inverse_metric(g: np.ndarray) -> np.ndarray:
    """Symbolic inverse via adjugate / determinant."""
    n = g.shape[0]
    det = metric_determinant(g)
    inv = _object_array((n, n))
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(g, j, axis=0), i, axis=1)
            cof = metric_determinant(minor)
            if (i + j) % 2 == 1:
                cof = ex.neg(cof)
            inv[i, j] = simplify(ex.div(cof, det))
    return inv


def _guard(what: str, index: tuple, e: Expr):
    count = ex.node_count(e, COMPONENT_NODE_LIMIT)
    if count > COMPONENT_NODE_LIMIT:
        raise ResourceLimitError(what, index, count)


def christoffel_at(chart: MetricChart, inverse: np.ndarray | None = None) -> np.ndarray:
    """Christoffel symbols Gamma^k_ij as an (n, n, n) object array [k, i, j]."""
    n = chart.n
    g = chart.metric
    ginv = _inverse_metric(g) if inverse is None else inverse
    coords = chart.coordinates

    dg = _object_array((n, n, n))  # dg[a, i, j] = d_a g_ij
    for a in range(n):
        for i in range(n):
            for j in range(n):
                dg[a, i, j] = differentiate(g[i, j], coords[a])

    gamma = _object_array((n, n, n))
    half = ex.const(1) / 2
    for k in range(n):
        for i in range(n):
            for j in range(n):
                acc = ex.ZERO
                for l in range(n):
                    inner = ex.add(dg[i, j, l], ex.sub(dg[j, i, l], dg[l, i, j]))
                    acc = ex.add(acc, ex.mul(ginv[k, l], inner))
                gamma[k, i, j] = simplify(ex.mul(half, acc))
                _guard("christoffel", (k, i, j), gamma[k, i, j])
    return gamma


class CurvatureBundle:
    """Everything curvature-related for one chart, built symbolically once.

    Fields: inverse_metric, christoffel (Gamma^k_ij at [k,i,j]), riemann_13
    (R(d_i,d_j)d_k coefficient of d_l at [i,j,k,l]), riemann (0,4), ricci,
    scalar_curvature, gtensor (the curvature-like tensor of the metric),
    concircular. Covariant derivatives of the curvature tensors are built on
    first use and cached.
    """

    def __init__(self, chart: MetricChart):
        self.chart = chart
        n = chart.n
        coords = chart.coordinates
        g = chart.metric

        self.inverse_metric = _inverse_metric(g)
        self.christoffel = christoffel_at(chart, self.inverse_metric)
        gamma = self.christoffel

        riem13 = _object_array((n, n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        acc = ex.sub(
                            differentiate(gamma[l, j, k], coords[i]),
                            differentiate(gamma[l, i, k], coords[j]),
                        )
                        for m in range(n):
                            acc = ex.add(acc, ex.mul(gamma[m, j, k], gamma[l, i, m]))
                            acc = ex.sub(acc, ex.mul(gamma[m, i, k], gamma[l, j, m]))
                        riem13[i, j, k, l] = simplify(acc)
                        _guard("riemann_13", (i, j, k, l), riem13[i, j, k, l])
        self.riemann_13 = riem13

        riem = _object_array((n, n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for m in range(n):
                        acc = ex.ZERO
                        for l in range(n):
                            acc = ex.add(acc, ex.mul(riem13[i, j, k, l], g[l, m]))
                        riem[i, j, k, m] = simplify(acc)
        self.riemann = TensorField(n, 4, riem, symmetry="riemann-like")

        ric = _object_array((n, n))
        for j in range(n):
            for k in range(n):
                ric[j, k] = simplify(ex.esum(riem13[i, j, k, i] for i in range(n)))
        self.ricci = TensorField(n, 2, ric, symmetry="symmetric-2")

        self.scalar_curvature = simplify(
            ex.esum(
                ex.mul(self.inverse_metric[j, k], ric[j, k])
                for j in range(n)
                for k in range(n)
            )
        )

        gt = _object_array((n, n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        gt[i, j, k, l] = simplify(
                            ex.sub(ex.mul(g[j, k], g[i, l]), ex.mul(g[i, k], g[j, l]))
                        )
        self.gtensor = TensorField(n, 4, gt, symmetry="riemann-like")

        scale = ex.div(self.scalar_curvature, ex.const(n * (n - 1)))
        conc = _object_array((n, n, n, n))
        for idx in np.ndindex(*(n,) * 4):
            conc[idx] = simplify(ex.sub(riem[idx], ex.mul(scale, gt[idx])))
        self.concircular = TensorField(n, 4, conc, symmetry="riemann-like")

        self._derived: dict = {}
        self._blocks: dict = {}

    @property
    def n(self) -> int:
        return self.chart.n

    # -- lazily built covariant derivatives ---------------------------------

    def nabla_riemann(self) -> TensorField:
        if "nabla_riemann" not in self._derived:
            self._derived["nabla_riemann"] = covariant_derivative_at(self, self.riemann)
        return self._derived["nabla_riemann"]

    def nabla_concircular(self) -> TensorField:
        if "nabla_concircular" not in self._derived:
            self._derived["nabla_concircular"] = covariant_derivative_at(self, self.concircular)
        return self._derived["nabla_concircular"]

    def nabla2_riemann(self) -> TensorField:
        if "nabla2_riemann" not in self._derived:
            self._derived["nabla2_riemann"] = covariant_derivative_at(self, self.riemann, order=2)
        return self._derived["nabla2_riemann"]

    # -- numeric evaluation with per-point-set caching -----------------------

    def _point_key(self, points) -> tuple:
        return tuple(tuple(p[c] for c in self.chart.coordinates) for p in points)

    def values_at(self, points) -> dict:
        """Numeric component arrays of the core fields at the given points.

        Returns a dict with keys metric, inverse_metric, christoffel,
        riemann_13, riemann, ricci, scalar, gtensor, concircular; each value
        has a leading point axis.
        """
        key = self._point_key(points)
        if key in self._blocks:
            return self._blocks[key]
        n = self.n
        named = {
            "metric": self.chart.metric,
            "inverse_metric": self.inverse_metric,
            "christoffel": self.christoffel,
            "riemann_13": self.riemann_13,
            "riemann": self.riemann.components,
            "ricci": self.ricci.components,
            "gtensor": self.gtensor.components,
            "concircular": self.concircular.components,
        }
        exprs = [self.scalar_curvature]
        spans = []
        for name, arr in named.items():
            flat = list(arr.ravel())
            spans.append((name, len(exprs), len(flat), arr.shape))
            exprs.extend(flat)
        columns = points_to_columns(points, self.chart.coordinates)
        cols = ex.evaluate_block(exprs, columns)
        block = np.stack(cols, axis=-1)  # (npts, nexprs)
        out = {"scalar": block[:, 0]}
        for name, start, size, shape in spans:
            out[name] = block[:, start : start + size].reshape((len(points),) + shape)
        self._blocks[key] = out
        return out

    def field_values(self, tf: TensorField, points, tag: str = "") -> np.ndarray:
        """Numeric values of one derived field, cached per (field, point set).

        The cache key is built from the interned component ids, so two
        structurally different fields never collide even if the caller
        reuses a tag.
        """
        key = (tuple(id(c) for c in tf.components.ravel()), self._point_key(points))
        if key not in self._blocks:
            self._blocks[key] = tf.evaluate_block(points)
        return self._blocks[key]


def curvature_bundle_at(chart: MetricChart) -> CurvatureBundle:
    """Build the full symbolic curvature apparatus for a chart."""
    return CurvatureBundle(chart)


def covariant_derivative_at(bundle: CurvatureBundle, tensor: TensorField, order: int = 1) -> TensorField:
    """Covariant derivative of an all-lower tensor field; new index first.

    order=2 applies the derivative twice, so the result's first two slots are
    (a, b) with nabla^2_{a,b} = nabla_a nabla_b - nabla_{nabla_a b}.
    """
    if order not in (1, 2):
        raise GeometryError(f"order must be 1 or 2, got {order}")
    n = bundle.n
    if tensor.dim != n:
        raise GeometryError(f"tensor dimension {tensor.dim} != chart dimension {n}")
    coords = bundle.chart.coordinates
    gamma = bundle.christoffel
    rank = tensor.rank
    comp = tensor.components

    out = _object_array((n,) * (rank + 1))
    for a in range(n):
        for idx in np.ndindex(*(n,) * rank):
            acc = differentiate(comp[idx], coords[a])
            for s in range(rank):
                for m in range(n):
                    swapped = idx[:s] + (m,) + idx[s + 1 :]
                    acc = ex.sub(acc, ex.mul(gamma[m, a, idx[s]], comp[swapped]))
            out[(a,) + idx] = simplify(acc)
    result = TensorField(n, rank + 1, out, symmetry="none")
    if order == 2:
        return covariant_derivative_at(bundle, result, order=1)
    return result


def curvature_action_at(bundle: CurvatureBundle, tensor: TensorField) -> TensorField:
    """(R(d_u, d_v) T)(d_w, d_x, d_y, d_z) for a rank-4 field, via the
    derivation property: minus the sum of T with R(d_u,d_v) hooked into each
    slot. Independent of covariant differentiation."""
    n = bundle.n
    if tensor.rank != 4 or tensor.dim != n:
        raise GeometryError("curvature action expects a rank-4 field on the same chart")
    riem13 = bundle.riemann_13
    comp = tensor.components
    out = _object_array((n,) * 6)
    for u in range(n):
        for v in range(n):
            for w, x, y, z in np.ndindex(*(n,) * 4):
                acc = ex.ZERO
                for m in range(n):
                    acc = ex.add(acc, ex.mul(riem13[u, v, w, m], comp[m, x, y, z]))
                    acc = ex.add(acc, ex.mul(riem13[u, v, x, m], comp[w, m, y, z]))
                    acc = ex.add(acc, ex.mul(riem13[u, v, y, m], comp[w, x, m, z]))
                    acc = ex.add(acc, ex.mul(riem13[u, v, z, m], comp[w, x, y, m]))
                out[u, v, w, x, y, z] = simplify(ex.neg(acc))
    return TensorField(n, 6, out, symmetry="none")


def curvature_action_from_second_derivative(
    bundle: CurvatureBundle, tensor: TensorField
) -> TensorField:
    """Same action computed as the antisymmetrized second covariant
    derivative, nabla^2_{u,v} T - nabla^2_{v,u} T (the Ricci identity route).
    """
    n = bundle.n
    second = covariant_derivative_at(bundle, tensor, order=2)
    comp = second.components
    out = _object_array((n,) * (tensor.rank + 2))
    # The difference is left unsimplified on purpose: both branches share one
    # interned DAG, so block evaluation stays cheap, while normalizing 729
    # large differences costs far more than it ever saves.
    for u in range(n):
        for v in range(n):
            for idx in np.ndindex(*(n,) * tensor.rank):
                out[(u, v) + idx] = ex.sub(comp[(u, v) + idx], comp[(v, u) + idx])
    return TensorField(n, tensor.rank + 2, out, symmetry="none")


def exterior_derivative_one_form_at(bundle: CurvatureBundle, omega: TensorField) -> TensorField:
    """d omega for a 1-form, with (d w)(U,V) = ((nabla_U w)(V) - (nabla_V w)(U)) / 2."""
    if omega.rank != 1 or omega.dim != bundle.n:
        raise GeometryError("exterior derivative expects a 1-form on the same chart")
    n = bundle.n
    grad = covariant_derivative_at(bundle, omega).components  # [a, i] = (nabla_a w)_i
    half = ex.const(1) / 2
    out = _object_array((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = simplify(ex.mul(half, ex.sub(grad[i, j], grad[j, i])))
    return TensorField(n, 2, out, symmetry="antisymmetric-2")


def wedge_two_one_forms_at(mu: TensorField, lam: TensorField) -> TensorField:
    """mu wedge lam with the 1/2 normalization matching the exterior derivative."""
    if mu.rank != 1 or lam.rank != 1 or mu.dim != lam.dim:
        raise GeometryError("wedge expects two 1-forms of equal dimension")
    n = mu.dim
    half = ex.const(1) / 2
    out = _object_array((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = simplify(
                ex.mul(
                    half,
                    ex.sub(
                        ex.mul(mu.components[i], lam.components[j]),
                        ex.mul(mu.components[j], lam.components[i]),
                    ),
                )
            )
    return TensorField(n, 2, out, symmetry="antisymmetric-2")
