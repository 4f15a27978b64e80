"""Mean width of convex hulls of finite point sets.

The functional computed here is the raw integral of the support function
over the unit sphere with Lebesgue surface measure (total mass n * delta_n),
so in the plane it equals the hull perimeter.  Three routes are provided:
sphere quadrature (deterministic trapezoid in the plane, antithetic Monte
Carlo in higher dimensions), the exact planar perimeter, and the 3-d edge
functional sum(beta_ij * d_ij) scaled by a calibrated dimensional constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from .configurations import PointConfiguration, embed
from .errors import GeometryError, InputError
from .polyhedra import convex_hull_2d
from .truncated_volume import unit_ball_volume

_CALIBRATION_SEED = 987654321
_CALIBRATION_NODES = 1_000_000
_STDERR_FLOOR = 1e-15


@dataclass(frozen=True)
class MeanWidthResult:
    """Mean-width value with its method tag and error estimate."""

    value: float
    method: str                 # quadrature | exact2d | edge_sum_3d
    stderr: float
    nodes_used: int


@dataclass(frozen=True)
class EdgeCurvatureData:
    """Hull edge with its length and exterior (dihedral complement) angle."""

    edge: tuple[int, int]
    length: float
    exterior_angle: float


@dataclass(frozen=True)
class CalibrationConstant:
    """Multiplier turning a lower-dimensional reference functional into M_n.

    For n0 = 2 the reference functional is the planar hull perimeter; for
    n0 = 3 it is the edge sum sum(beta_ij * d_ij).  Same-dimension constants
    where the reference functional is M_n itself are exactly 1.
    """

    n0: int
    n: int
    value: float
    stderr: float = 0.0


def _support_values(pts: np.ndarray, directions: np.ndarray) -> np.ndarray:
    return np.max(directions @ pts.T, axis=1)


def mean_width_quadrature(points: PointConfiguration, nodes: int,
                          seed: int = 0) -> MeanWidthResult:
    """Sphere quadrature of the support function.

    In the plane the rule is a deterministic uniform-angle trapezoid and the
    reported stderr is the difference against the half-resolution rule (a
    conservative discretization bound).  In higher dimensions directions are
    sampled antithetically, which also keeps the estimate non-negative.
    """
    if nodes < 1:
        raise InputError("nodes must be >= 1")
    n = points.dimension
    # centering changes no support integral (the linear term integrates to
    # zero over the sphere) but shrinks the sampling variance
    pts = points.points - np.mean(points.points, axis=0)
    total = n * unit_ball_volume(n)

    if n == 2:
        theta = 2.0 * math.pi * np.arange(nodes) / nodes
        h = _support_values(pts, np.column_stack([np.cos(theta), np.sin(theta)]))
        value = float(np.mean(h)) * total
        if nodes >= 2:
            coarse = float(np.mean(h[::2])) * total
            # kink contributions bound the periodic-rule error by
            # perimeter * dtheta^2 / 8 (sum of support-derivative jumps is
            # the perimeter, which is the value itself here)
            dtheta = 2.0 * math.pi / nodes
            stderr = max(abs(value - coarse), abs(value) * dtheta * dtheta / 8.0)
        else:
            stderr = abs(value)
        return MeanWidthResult(value=max(value, 0.0), method="quadrature",
                               stderr=max(stderr, _STDERR_FLOOR * (1 + abs(value))),
                               nodes_used=nodes)

    pairs = max(1, (nodes + 1) // 2)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((pairs, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True) + 1e-300
    pair_means = 0.5 * (_support_values(pts, g) + _support_values(pts, -g))
    value = float(np.mean(pair_means)) * total
    if pairs >= 2:
        stderr = float(np.std(pair_means, ddof=1) / math.sqrt(pairs)) * total
    else:
        stderr = abs(value)
    return MeanWidthResult(value=value, method="quadrature",
                           stderr=max(stderr, _STDERR_FLOOR * (1 + abs(value))),
                           nodes_used=2 * pairs)


def mean_width_exact_2d(points: PointConfiguration) -> MeanWidthResult:
    """Exact planar mean width: the hull perimeter (a segment counts twice)."""
    if points.dimension != 2:
        raise InputError("mean_width_exact_2d requires a 2-dimensional configuration")
    hull = convex_hull_2d(points)
    m = hull.shape[0]
    if m == 1:
        value = 0.0
    elif m == 2:
        value = 2.0 * float(np.linalg.norm(hull[1] - hull[0]))
    else:
        value = float(np.sum(np.linalg.norm(np.roll(hull, -1, axis=0) - hull, axis=1)))
    return MeanWidthResult(value=value, method="exact2d", stderr=0.0, nodes_used=0)


def edge_curvatures_3d(points: PointConfiguration) -> list[EdgeCurvatureData]:
    """Edges of a full-dimensional 3-d hull with lengths and exterior angles.

    Coplanar facets are merged (1e-8 angular tolerance) so triangulation
    edges inside a flat face are not reported.  The exterior angle of an edge
    is the angle between the outward normals of its two incident facets.
    """
    if points.dimension != 3:
        raise InputError("edge_curvatures_3d requires a 3-dimensional configuration")
    pts = points.points
    degenerate_msg = ("hull is not full-dimensional; use mean_width_exact_2d in "
                      "the spanning plane or mean_width_quadrature")
    if points.n_points < 4:
        raise GeometryError(degenerate_msg)
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise GeometryError(degenerate_msg) from exc
    diam = float(np.max(np.ptp(pts, axis=0)))
    if hull.volume <= 1e-10 * max(diam, 1e-30) ** 3:
        raise GeometryError(degenerate_msg)

    normals = hull.equations[:, :3]
    nf = len(hull.simplices)
    parent = list(range(nf))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for s in range(nf):
        for t in hull.neighbors[s]:
            if t > s and np.linalg.norm(normals[s] - normals[t]) <= 1e-8:
                ra, rb = find(s), find(int(t))
                if ra != rb:
                    parent[rb] = ra

    edges: dict[tuple[int, int], tuple[int, int]] = {}
    for s in range(nf):
        for k, t in enumerate(hull.neighbors[s]):
            t = int(t)
            if t < s:
                continue
            gs, gt = find(s), find(t)
            if gs == gt:
                continue
            verts = [int(v) for j, v in enumerate(hull.simplices[s]) if j != k]
            key = (min(verts), max(verts))
            edges.setdefault(key, (gs, gt))

    out = []
    for (i, j), (gs, gt) in sorted(edges.items()):
        c = float(np.clip(np.dot(normals[gs], normals[gt]), -1.0, 1.0))
        beta = math.acos(c)
        out.append(EdgeCurvatureData(edge=(i, j),
                                     length=float(np.linalg.norm(pts[i] - pts[j])),
                                     exterior_angle=beta))
    return out


def edge_functional_3d(points: PointConfiguration) -> float:
    """sum(beta_ij * d_ij) over the hull edges."""
    return sum(e.exterior_angle * e.length for e in edge_curvatures_3d(points))


def mean_width_edge_sum_3d(points: PointConfiguration,
                           c: CalibrationConstant) -> MeanWidthResult:
    """Mean width from the calibrated edge functional c * sum(beta * d)."""
    if not (c.n0 == 3 and c.n == 3):
        raise InputError("edge-sum evaluation needs the constant from calibrate(3, 3)")
    s = edge_functional_3d(points)
    return MeanWidthResult(value=c.value * s, method="edge_sum_3d",
                           stderr=max(c.stderr * s, _STDERR_FLOOR * (1 + c.value * s)),
                           nodes_used=0)


def _unit_segment(n: int) -> PointConfiguration:
    pts = np.zeros((2, n))
    pts[1, 0] = 1.0
    return PointConfiguration(dimension=n, points=pts)


def _unit_cube() -> PointConfiguration:
    corners = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)],
                       dtype=float)
    return PointConfiguration(dimension=3, points=corners)


_calibration_cache: dict[tuple[int, int], CalibrationConstant] = {}


def calibrate(n0: int, n: int, nodes: int = _CALIBRATION_NODES,
              seed: int = _CALIBRATION_SEED) -> CalibrationConstant:
    """Fix the dimensional constant of the n0-dimensional reference formula.

    Supported: 2 <= n0 <= n <= 4 except (4, 4) has no lower formula and is 1
    by convention, as is (2, 2) where the reference functional is already the
    perimeter.  Lifting constants (2, n) use a unit segment as the reference
    body; edge constants (3, n) use the unit cube.  Reference integrals come
    from quadrature with a built-in seed, so results are deterministic.
    """
    if not (2 <= n0 <= n <= 4):
        raise InputError(f"unsupported calibration pair (n0={n0}, n={n})")
    key = (n0, n)
    if key in _calibration_cache and nodes == _CALIBRATION_NODES:
        return _calibration_cache[key]

    if n0 == n and n0 in (2, 4):
        const = CalibrationConstant(n0=n0, n=n, value=1.0, stderr=0.0)
    elif n0 == 2:
        seg = _unit_segment(n)
        q = mean_width_quadrature(seg, nodes=nodes, seed=seed)
        ref = mean_width_exact_2d(_unit_segment(2)).value      # = 2
        const = CalibrationConstant(n0=2, n=n, value=q.value / ref,
                                    stderr=q.stderr / ref)
    else:   # n0 == 3, n in (3, 4)
        cube = _unit_cube()
        s = edge_functional_3d(cube)
        body = cube if n == 3 else embed(cube, 4)
        q = mean_width_quadrature(body, nodes=nodes, seed=seed)
        const = CalibrationConstant(n0=3, n=n, value=q.value / s, stderr=q.stderr / s)

    if nodes == _CALIBRATION_NODES:
        _calibration_cache[key] = const
    return const
