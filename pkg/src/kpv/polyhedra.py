"""Halfspaces, polyhedral sets, their facets, and small convex-geometry helpers.

A polyhedral set is an intersection of finitely many closed halfspaces (an
empty list means all of E^n).  Facet extraction reports, for a base point,
the distance, sign, and foot point of every hyperplane that carries a genuine
(n-1)-dimensional face, together with that face expressed as a polyhedral set
in the hyperplane's intrinsic coordinates.

Feasibility and facet-dimension questions are decided by a small max-margin
problem solved by exhaustive vertex enumeration, which is exact at desk scale
(dimension <= 4, a dozen constraints) and avoids a general LP dependency.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .configurations import PointConfiguration
from .errors import GeometryError, InputError

# Chord tolerance for deciding that two unit normals describe the same
# hyperplane direction.
HYPERPLANE_ANGLE_TOL = 1e-10
# Slack allowed when testing point membership.
CONTAINS_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Halfspace:
    """Closed halfspace {x : <x, normal> <= offset} with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        v = np.asarray(self.normal, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise InputError("halfspace normal must be a 1d vector")
        norm = float(np.linalg.norm(v))
        if not np.isfinite(norm) or norm < 1e-300:
            raise InputError("halfspace normal must be a non-zero finite vector")
        v = v / norm
        v.setflags(write=False)
        object.__setattr__(self, "normal", v)
        object.__setattr__(self, "offset", float(self.offset) / norm)

    @property
    def dimension(self) -> int:
        return self.normal.size

    def flipped(self) -> "Halfspace":
        """The complementary closed halfspace (shared boundary hyperplane)."""
        return Halfspace(normal=-self.normal, offset=-self.offset)

    def slack(self, x: np.ndarray) -> float:
        """offset - <x, normal>; non-negative inside the halfspace."""
        return self.offset - float(np.dot(np.asarray(x, dtype=float), self.normal))

    def to_dict(self) -> dict:
        return {"normal": self.normal.tolist(), "offset": self.offset}


@dataclass(eq=False)
class PolyhedralSet:
    """Intersection of closed halfspaces in E^n; an empty list is all of E^n."""

    dimension: int
    halfspaces: tuple = ()
    _margin_cache: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.dimension = int(self.dimension)
        if self.dimension < 1:
            raise InputError("dimension must be >= 1")
        hs = tuple(self.halfspaces)
        for h in hs:
            if not isinstance(h, Halfspace):
                raise InputError("halfspaces must be Halfspace instances")
            if h.dimension != self.dimension:
                raise InputError(
                    f"halfspace dimension {h.dimension} != set dimension {self.dimension}")
        self.halfspaces = hs

    @property
    def n_halfspaces(self) -> int:
        return len(self.halfspaces)

    def constraint_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with rows <a_k, x> <= b_k; empty arrays when unconstrained."""
        if not self.halfspaces:
            return np.zeros((0, self.dimension)), np.zeros(0)
        A = np.array([h.normal for h in self.halfspaces])
        b = np.array([h.offset for h in self.halfspaces])
        return A, b

    def scale(self) -> float:
        """Characteristic length used to set absolute tolerances."""
        if not self.halfspaces:
            return 1.0
        return max(1.0, float(np.max(np.abs([h.offset for h in self.halfspaces]))))

    def feasibility_margin(self) -> float:
        """Radius of the largest ball that fits inside the set (capped).

        Positive: full-dimensional interior.  Near zero: degenerate (the set
        lies in a lower-dimensional flat).  Negative: empty.
        """
        if self._margin_cache is None:
            A, b = self.constraint_arrays()
            self._margin_cache = _max_margin_two_phase(A, b, self.scale())
        return self._margin_cache

    def is_feasible(self, tol: float | None = None) -> bool:
        if not self.halfspaces:
            return True
        t = self.feasibility_margin()
        return t >= -(tol if tol is not None else 1e-9 * self.scale())

    def to_dict(self) -> dict:
        return {"dimension": self.dimension,
                "halfspaces": [h.to_dict() for h in self.halfspaces]}

    @classmethod
    def from_dict(cls, d: dict, check_feasible: bool = True) -> "PolyhedralSet":
        try:
            dim = d["dimension"]
            raw = d["halfspaces"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"polyhedral-set record missing field: {exc}") from exc
        hs = []
        for item in raw:
            try:
                hs.append(Halfspace(np.asarray(item["normal"], dtype=float),
                                    float(item["offset"])))
            except (KeyError, TypeError) as exc:
                raise InputError(f"bad halfspace record {item!r}: {exc}") from exc
        P = cls(dimension=dim, halfspaces=tuple(hs))
        if check_feasible and not P.is_feasible():
            raise GeometryError("polyhedral set is empty (infeasible halfspace system)")
        return P


@dataclass(frozen=True, eq=False)
class FaceData:
    """A genuine (n-1)-face: distance, sign, foot point, and the induced set.

    epsilon is +1 when the base point lies in the face's halfspace (including
    on its hyperplane), -1 otherwise.  induced_face lives in the hyperplane's
    intrinsic coordinates with the origin at the foot point.
    """

    face_index: int
    h: float
    epsilon: int
    foot: np.ndarray
    induced_face: PolyhedralSet


# ---------------------------------------------------------------------------
# max-margin solver (exhaustive vertex enumeration, desk scale)
# ---------------------------------------------------------------------------

def _solve_max_margin(A: np.ndarray, b: np.ndarray, box: float) -> float:
    """Maximize t subject to A y + t <= b, |y_i| <= box, t <= box.

    Returns the best margin found over all vertices of the (y, t) polytope;
    -inf when the system is infeasible within roundoff tolerance.
    """
    m, d = A.shape
    if m == 0:
        return box
    rows = np.zeros((m + 2 * d + 1, d + 1))
    rhs = np.zeros(m + 2 * d + 1)
    rows[:m, :d] = A
    rows[:m, d] = 1.0
    rhs[:m] = b
    for i in range(d):
        rows[m + 2 * i, i] = 1.0
        rhs[m + 2 * i] = box
        rows[m + 2 * i + 1, i] = -1.0
        rhs[m + 2 * i + 1] = box
    rows[-1, d] = 1.0
    rhs[-1] = box

    nrows = rows.shape[0]
    combos = np.array(list(itertools.combinations(range(nrows), d + 1)))
    mats = rows[combos]                      # (K, d+1, d+1)
    vecs = rhs[combos]                       # (K, d+1)
    dets = np.abs(np.linalg.det(mats))
    good = dets > 1e-12
    if not np.any(good):
        return -np.inf
    sols = np.linalg.solve(mats[good], vecs[good][..., None])[..., 0]
    # reject vertices violating any constraint beyond roundoff at their scale
    vals = rows @ sols.T
    denom = 1.0 + np.abs(vals) + np.abs(rhs[:, None])
    with np.errstate(invalid="ignore"):
        feasible = np.all(vals - rhs[:, None] <= 1e-9 * denom, axis=0)
    if not np.any(feasible):
        return -np.inf
    return float(np.max(sols[feasible, d]))


def _max_margin_two_phase(A: np.ndarray, b: np.ndarray, scale: float) -> float:
    """Margin solve with a near box first, then a far box for remote regions."""
    t = _solve_max_margin(A, b, box=100.0 * scale)
    if t > 1e-6 * scale:
        return t
    t_far = _solve_max_margin(A, b, box=1e5 * scale)
    return max(t, t_far)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def contains(P: PolyhedralSet, x) -> bool:
    """Membership test with a small absolute slack."""
    x = np.asarray(x, dtype=float)
    if x.shape != (P.dimension,):
        raise InputError(f"point shape {x.shape} does not match dimension {P.dimension}")
    A, b = P.constraint_arrays()
    if A.shape[0] == 0:
        return True
    return bool(np.all(A @ x <= b + CONTAINS_SLACK * max(1.0, P.scale())))


def complement_set(P: PolyhedralSet) -> PolyhedralSet:
    """Intersection of the complementary halfspaces, entrywise flipped."""
    flipped = tuple(h.flipped() for h in P.halfspaces)
    Q = PolyhedralSet(dimension=P.dimension, halfspaces=flipped)
    if flipped and not Q.is_feasible():
        raise GeometryError(
            "complement is empty: flipped halfspaces have no common point")
    return Q


def hyperplane_basis(normal: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the hyperplane orthogonal to normal.

    Returns an (n, n-1) matrix whose columns span normal^perp; built from a
    Householder reflection so nearby normals give nearby bases.
    """
    normal = np.asarray(normal, dtype=float)
    n = normal.size
    e = np.zeros(n)
    k = int(np.argmax(np.abs(normal)))
    e[k] = 1.0 if normal[k] >= 0 else -1.0
    v = normal + np.linalg.norm(normal) * e
    v /= np.linalg.norm(v)
    H = np.eye(n) - 2.0 * np.outer(v, v)   # H @ normal = -|normal| e_k
    cols = [i for i in range(n) if i != k]
    return H[:, cols]


def _deduplicate(P: PolyhedralSet) -> list[tuple[int, Halfspace]]:
    """Keep one representative per normal direction (tightest offset wins)."""
    kept: list[tuple[int, Halfspace]] = []
    for idx, h in enumerate(P.halfspaces):
        merged = False
        for pos, (kidx, kh) in enumerate(kept):
            if np.linalg.norm(h.normal - kh.normal) <= HYPERPLANE_ANGLE_TOL:
                if h.offset < kh.offset:
                    kept[pos] = (idx, h)
                merged = True
                break
        if not merged:
            kept.append((idx, h))
    return kept


def face_data(P: PolyhedralSet, p0) -> list[FaceData]:
    """Genuine (n-1)-faces of P with distances and signs relative to p0.

    A halfspace contributes a face only when a relatively-open patch of its
    boundary hyperplane survives inside all other halfspaces; redundant
    halfspaces are dropped.  Raises GeometryError when a facet's dimension is
    numerically ambiguous.
    """
    if P.dimension < 2:
        raise InputError("face_data requires dimension >= 2")
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (P.dimension,):
        raise InputError(f"base point shape {p0.shape} does not match E^{P.dimension}")
    unique = _deduplicate(P)
    scale = max(P.scale(), 1.0 + float(np.linalg.norm(p0)))
    faces: list[FaceData] = []
    for idx, h in unique:
        others = [kh for kidx, kh in unique if kidx != idx]
        basis = hyperplane_basis(h.normal)
        sigma = h.slack(p0)
        foot = p0 + sigma * h.normal
        rows, offs = [], []
        empty_on_plane = False
        for oth in others:
            a = basis.T @ oth.normal
            beta = oth.offset - float(np.dot(foot, oth.normal))
            na = float(np.linalg.norm(a))
            if na <= 1e-12:
                # constraint hyperplane parallel to this one
                if beta < -1e-12 * scale:
                    empty_on_plane = True
                    break
                continue
            rows.append(a / na)
            offs.append(beta / na)
        if empty_on_plane:
            continue
        A = np.array(rows) if rows else np.zeros((0, P.dimension - 1))
        bvec = np.array(offs) if offs else np.zeros(0)
        t = _max_margin_two_phase(A, bvec, scale)
        if t <= 1e-12 * scale:
            continue
        if t <= 1e-7 * scale:
            raise GeometryError(
                f"facet dimension numerically ambiguous for halfspace {idx} "
                f"(margin {t:.3e} at scale {scale:.3e})")
        induced = PolyhedralSet(
            dimension=P.dimension - 1,
            halfspaces=tuple(Halfspace(A[k], bvec[k]) for k in range(A.shape[0])))
        faces.append(FaceData(
            face_index=idx,
            h=abs(sigma),
            epsilon=1 if sigma >= 0 else -1,
            foot=foot,
            induced_face=induced))
    return faces


def support_value(points: PointConfiguration, u) -> float:
    """Support function of the convex hull of the points in direction u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (points.dimension,):
        raise InputError(f"direction shape {u.shape} does not match E^{points.dimension}")
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise InputError("direction must be a unit vector")
    return float(np.max(points.points @ u))


def convex_hull_2d(points: PointConfiguration) -> np.ndarray:
    """Counterclockwise extreme points of a planar configuration.

    Collinear interior points are excluded; degenerate hulls (segment, single
    point) come back with two or one rows.
    """
    if points.dimension != 2:
        raise InputError("convex_hull_2d requires a 2-dimensional configuration")
    pts = np.unique(points.points, axis=0)
    if pts.shape[0] == 1:
        return pts.copy()
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    span = float(np.max(np.ptp(pts, axis=0)))
    eps = 1e-12 * max(1.0, span) ** 2

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
                if cross <= eps:     # non-left turn: drop collinear/interior
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if hull.shape[0] == 0:           # all points coincide after dedup
        return pts[:1].copy()
    if hull.shape[0] > 2 or pts.shape[0] == 2:
        return hull
    # every point collinear: return the two extreme endpoints
    return np.array([lower[0], lower[-1]])


def load_polyhedral_set(path) -> PolyhedralSet:
    import json
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read polyhedral set from {path}: {exc}") from exc
    return PolyhedralSet.from_dict(data)
