"""Radial volume profiles of polyhedral sets truncated by a growing ball.

The central object is V(r), the n-volume of P intersected with the ball of
radius r about a base point.  Between breakpoints (the face distances and
their recursively propagated images) V satisfies a linear first-order ODE
whose source terms are the same profiles one dimension down, evaluated on the
face hyperplanes:

    V'(r) = (n V(r) - sum_i eps_i h_i V_i(sqrt(r^2 - h_i^2))) / r

with face terms switched off below their face distance.  The recursion
bottoms out at exact interval overlap lengths in dimension one.  Integration
uses an adaptive embedded 4(5) Runge-Kutta pair restarted at every
breakpoint; the singular start at r = 0 is bypassed with the exact cone
formula V = omega * delta_n * r^n, where omega is the solid-angle fraction of
P at the base point.

The transform W(s) = s^n V(1/s) is analytic at s = 0; its first two Taylor
coefficients (the leading Laurent coefficients of V at infinity) are
recovered by least squares on a large-radius window.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from .errors import GeometryError, InputError, NumericalError
from .polyhedra import FaceData, Halfspace, PolyhedralSet, face_data

# directional sampling budget for solid-angle fractions of cones with three
# or more active halfspaces (exact closed forms cover the other cases)
_OMEGA_SAMPLES = 1_000_000
_OMEGA_SEED = 20230517


def unit_ball_volume(n: int) -> float:
    """delta_n, the volume of the unit ball in E^n."""
    if n < 0:
        raise InputError("dimension must be non-negative")
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


@dataclass(frozen=True)
class BallConstant:
    """Unit-ball volume bundled with its dimension."""

    n: int
    delta: float

    @classmethod
    def for_dimension(cls, n: int) -> "BallConstant":
        return cls(n=n, delta=unit_ball_volume(n))


@dataclass(frozen=True)
class StepControl:
    """Tolerances for the profile integrator.

    rtol is the local relative error target per step; atol_factor scales the
    absolute floor by delta_n * r^n at the segment end; breakpoint_tol is the
    event tolerance used when derivative evaluations must stay away from
    breakpoints.
    """

    rtol: float = 1e-10
    atol_factor: float = 1e-13
    breakpoint_tol: float = 1e-9


# ---------------------------------------------------------------------------
# evaluation pieces
# ---------------------------------------------------------------------------

class _DenseTable:
    """Flattened dense output of a sequence of RK45 segments.

    Stores the quartic interpolation polynomials of every accepted step both
    as numpy arrays (vector evaluation) and as python lists (fast scalar
    evaluation inside ODE right-hand sides).
    """

    __slots__ = ("lo", "hi", "ts", "t0", "h", "y0", "q",
                 "ts_np", "t0_np", "h_np", "y0_np", "q_np")

    def __init__(self, interpolants):
        t0, h, y0, q = [], [], [], []
        for seg in interpolants:
            t0.append(float(seg.t_old))
            h.append(float(seg.h))
            y0.append(float(seg.y_old[0]))
            row = np.asarray(seg.Q, dtype=float).ravel()
            if row.size != 4:
                raise NumericalError("unexpected dense-output order from integrator")
            q.append(tuple(row))
        self.t0, self.h, self.y0, self.q = t0, h, y0, q
        self.ts = t0[:]                      # left endpoints for bisect
        self.lo = t0[0]
        self.hi = t0[-1] + h[-1]
        self.ts_np = np.asarray(t0)
        self.t0_np = np.asarray(t0)
        self.h_np = np.asarray(h)
        self.y0_np = np.asarray(y0)
        self.q_np = np.asarray(q)

    def eval_scalar(self, r: float) -> float:
        i = bisect.bisect_right(self.ts, r) - 1
        if i < 0:
            i = 0
        elif i >= len(self.t0):
            i = len(self.t0) - 1
        x = (r - self.t0[i]) / self.h[i]
        q = self.q[i]
        return self.y0[i] + self.h[i] * x * (q[0] + x * (q[1] + x * (q[2] + x * q[3])))

    def eval_vec(self, r: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(self.ts_np, r, side="right") - 1,
                      0, len(self.t0) - 1)
        x = (r - self.t0_np[idx]) / self.h_np[idx]
        q = self.q_np[idx]
        poly = x * (q[:, 0] + x * (q[:, 1] + x * (q[:, 2] + x * q[:, 3])))
        return self.y0_np[idx] + self.h_np[idx] * poly


class RadialVolumeProfile:
    """Volume of a ball-truncated polyhedral set as a function of the radius.

    Supports evaluation and differentiation on [0, r_max] (unbounded for
    closed-form profiles).  w_at_zero / w_prime_at_zero hold the first two
    Taylor coefficients of W(s) = s^n V(1/s) at s = 0 once computed; they are
    set exactly for cone and interval profiles.
    """

    def __init__(self, dimension, breakpoints, omega, omega_stderr=0.0,
                 cone_r_end=np.inf, table=None, interval=None,
                 faces=None, r_max=np.inf):
        self.dimension = int(dimension)
        self.delta = unit_ball_volume(self.dimension)
        self.breakpoints = np.sort(np.asarray(breakpoints, dtype=float))
        self.omega = float(omega)
        self.omega_stderr = float(omega_stderr)
        self.cone_coef = self.omega * self.delta
        self.cone_r_end = float(cone_r_end)
        self.table = table
        self.interval = interval            # (a, b, t) for the 1-d base case
        self.faces = faces or []            # (h_i, eps_i, sub-profile) triples
        self.r_max = float(r_max)
        self.w_at_zero: float | None = None
        self.w_prime_at_zero: float | None = None
        self.w_fit_diagnostics: dict | None = None
        self.r_grid = np.zeros(0)
        self.values = np.zeros(0)
        if self.interval is not None:
            a, b, t = self.interval
            span = b - a
            if math.isinf(span):
                if math.isinf(a) and math.isinf(b):
                    self.w_at_zero, self.w_prime_at_zero = 2.0, 0.0
                else:
                    self.w_at_zero = 1.0
                    self.w_prime_at_zero = (t - a) if math.isinf(b) else (b - t)
            else:
                self.w_at_zero, self.w_prime_at_zero = 0.0, span
        elif self.table is None:
            # pure cone: V = omega * delta * r^n for every radius
            self.w_at_zero, self.w_prime_at_zero = self.cone_coef, 0.0

    # -- evaluation ---------------------------------------------------------

    def _check_range(self, rmax_requested: float):
        if rmax_requested > self.r_max * (1 + 1e-12):
            raise InputError(
                f"profile only extends to r_max={self.r_max:g}, "
                f"requested {rmax_requested:g}")

    def value_scalar(self, r: float) -> float:
        if r <= 0.0:
            return 0.0
        if self.interval is not None:
            a, b, t = self.interval
            lo = a if a > t - r else t - r
            hi = b if b < t + r else t + r
            return hi - lo if hi > lo else 0.0
        self._check_range(r)
        if r <= self.cone_r_end or self.table is None:
            return self.cone_coef * r ** self.dimension
        return self.table.eval_scalar(r)

    def value(self, r) -> np.ndarray | float:
        arr = np.asarray(r, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        out = np.zeros_like(arr)
        pos = arr > 0.0
        if self.interval is not None:
            a, b, t = self.interval
            lo = np.maximum(a, t - arr)
            hi = np.minimum(b, t + arr)
            out = np.where(pos, np.maximum(hi - lo, 0.0), 0.0)
        elif self.table is None:
            if np.any(pos):
                self._check_range(float(np.max(arr[pos])))
            out[pos] = self.cone_coef * arr[pos] ** self.dimension
        else:
            if np.any(pos):
                self._check_range(float(np.max(arr[pos])))
            cone = pos & (arr <= self.cone_r_end)
            ode = pos & (arr > self.cone_r_end)
            out[cone] = self.cone_coef * arr[cone] ** self.dimension
            if np.any(ode):
                out[ode] = self.table.eval_vec(arr[ode])
        return float(out[0]) if scalar else out

    __call__ = value

    def derivative_scalar(self, r: float) -> float:
        """dV/dr recovered from the ODE right-hand side (not differences)."""
        if r <= 0.0:
            return 0.0
        if self.interval is not None:
            a, b, t = self.interval
            if t + r < a or t - r > b:      # window has not reached the interval
                return 0.0
            return (1.0 if t - r > a else 0.0) + (1.0 if t + r < b else 0.0)
        s = 0.0
        for h, eps, sub in self.faces:
            if r > h:
                s += eps * h * sub.value_scalar(math.sqrt(r * r - h * h))
        return (self.dimension * self.value_scalar(r) - s) / r

    def derivative(self, r) -> np.ndarray | float:
        arr = np.asarray(r, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        out = np.array([self.derivative_scalar(float(x)) for x in arr])
        return float(out[0]) if scalar else out

    # -- invariant checks (used by the test suite) --------------------------

    def validate(self, rel_tol: float = 1e-9) -> None:
        v = self.values
        if v.size:
            scale = max(float(np.max(v)), 1e-300)
            if np.min(v) < -rel_tol * scale:
                raise NumericalError("profile values dropped below zero")
            if np.min(np.diff(v)) < -rel_tol * scale:
                raise NumericalError("profile values are not non-decreasing")
            bound = self.delta * self.r_grid ** self.dimension
            if np.any(v > bound * (1 + rel_tol) + rel_tol * scale):
                raise NumericalError("profile exceeds the ball-volume bound")
        if self.w_at_zero is not None:
            if not -rel_tol <= self.w_at_zero <= self.delta * (1 + rel_tol) + rel_tol:
                raise NumericalError("leading coefficient outside [0, delta_n]")


# ---------------------------------------------------------------------------
# solid-angle fraction of a polyhedral cone
# ---------------------------------------------------------------------------

def _wedge_fraction(n1: np.ndarray, n2: np.ndarray) -> float:
    """Direction fraction of {u : <u,n1> <= 0, <u,n2> <= 0} in any dimension."""
    c = float(np.clip(np.dot(n1, n2), -1.0, 1.0))
    gamma = math.acos(c)
    return (math.pi - gamma) / (2.0 * math.pi)


def _planar_cone_fraction(normals: np.ndarray) -> float:
    """Exact angular fraction of a 2-d cone {u : N u <= 0}."""
    rays = []
    for v in normals:
        rays.append(np.array([-v[1], v[0]]))
        rays.append(np.array([v[1], -v[0]]))
    feas = [r for r in rays if np.all(normals @ r <= 1e-12)]
    if not feas:
        return 0.0
    best = 0.0
    for i in range(len(feas)):
        for j in range(i + 1, len(feas)):
            dot = float(np.clip(np.dot(feas[i], feas[j]), -1.0, 1.0))
            best = max(best, math.acos(dot))
    return best / (2.0 * math.pi)


def _sampled_cone_fraction(normals: np.ndarray) -> tuple[float, float]:
    """Monte Carlo direction fraction with its binomial standard error."""
    n = normals.shape[1]
    rng = np.random.default_rng(_OMEGA_SEED)
    hits = 0
    total = _OMEGA_SAMPLES
    chunk = 250_000
    done = 0
    while done < total:
        m = min(chunk, total - done)
        g = rng.standard_normal((m, n))
        hits += int(np.count_nonzero(np.all(g @ normals.T <= 0.0, axis=1)))
        done += m
    p = hits / total
    return p, math.sqrt(max(p * (1 - p), 0.0) / total)


def _solid_angle_fraction(active_normals: list[np.ndarray], dim: int) -> tuple[float, float]:
    if not active_normals:
        return 1.0, 0.0
    if len(active_normals) == 1:
        return 0.5, 0.0
    if len(active_normals) == 2:
        return _wedge_fraction(active_normals[0], active_normals[1]), 0.0
    if dim == 2:
        return _planar_cone_fraction(np.array(active_normals)), 0.0
    return _sampled_cone_fraction(np.array(active_normals))


# ---------------------------------------------------------------------------
# profile construction
# ---------------------------------------------------------------------------

def _interval_profile(P: PolyhedralSet, p0: np.ndarray) -> RadialVolumeProfile:
    a, b = -np.inf, np.inf
    for h in P.halfspaces:
        if h.normal[0] > 0:
            b = min(b, h.offset / h.normal[0])
        else:
            a = max(a, -h.offset / (-h.normal[0]))
    if a > b + 1e-12 * max(1.0, abs(a), abs(b)):
        raise GeometryError("1-d polyhedral set is empty")
    t = float(p0[0])
    if a > b:
        a = b = 0.5 * (a + b)
    bps = [abs(t - a), abs(t - b)]
    bps = sorted({round(x, 15) for x in bps if np.isfinite(x) and x > 0})
    prof = RadialVolumeProfile(dimension=1, breakpoints=np.asarray(bps),
                               omega=(1.0 if a < t < b else (0.5 if a == t or b == t else 0.0)),
                               interval=(a, b, t))
    grid_hi = max([x for x in (abs(t - a), abs(t - b)) if np.isfinite(x)], default=1.0)
    grid = np.linspace(0.0, 2.0 * max(grid_hi, 1.0), 33)
    prof.r_grid = grid
    prof.values = np.asarray(prof.value(grid))
    return prof


def _zero_profile(dimension: int) -> RadialVolumeProfile:
    prof = RadialVolumeProfile(dimension=dimension, breakpoints=np.zeros(0), omega=0.0)
    prof.r_grid = np.linspace(0.0, 1.0, 5)
    prof.values = np.zeros(5)
    return prof


def _classify_base_point(P: PolyhedralSet, p0: np.ndarray, scale: float):
    """Slack signs of p0 against the halfspaces: (violated, active_normals)."""
    tol = 1e-9 * scale
    violated = False
    active = []
    for h in P.halfspaces:
        s = h.slack(p0)
        if s < -tol:
            violated = True
        elif s <= tol:
            active.append(h.normal)
    return violated, active


def volume_profile(P: PolyhedralSet, p0, r_max: float,
                   step_control: StepControl | None = None) -> RadialVolumeProfile:
    """Build V(r) for the truncated polytope P intersect B(p0, r) on [0, r_max].

    Face profiles are built recursively one dimension down (exact interval
    overlap at the base), the start is the exact cone formula on the segment
    before the first breakpoint, and integration restarts at every
    breakpoint.  Raises GeometryError for infeasible P and NumericalError
    when the step controller gives up (the message carries the radius).
    """
    control = step_control or StepControl()
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (P.dimension,):
        raise InputError(f"base point shape {p0.shape} does not match E^{P.dimension}")
    if r_max <= 0:
        raise InputError("r_max must be positive")
    if P.dimension == 1:
        return _interval_profile(P, p0)

    scale = max(P.scale(), 1.0 + float(np.linalg.norm(p0)))
    violated, active = _classify_base_point(P, p0, scale)
    if violated:
        margin = P.feasibility_margin()
        if margin < -1e-9 * scale:
            raise GeometryError("polyhedral set is empty (infeasible halfspace system)")
        if margin <= 1e-9 * scale:
            return _zero_profile(P.dimension)
        omega, omega_err = 0.0, 0.0
    else:
        omega, omega_err = _solid_angle_fraction(active, P.dimension)

    faces = face_data(P, p0)
    n = P.dimension
    delta = unit_ball_volume(n)

    sub_profiles = []
    breakpoints: list[float] = []
    pos_faces = []
    for f in faces:
        if f.h > 1e-12 * scale:
            breakpoints.append(f.h)
        x_max = math.sqrt(max(r_max * r_max - f.h * f.h, 0.0)) * (1 + 1e-9) + 1e-12
        sub = volume_profile(f.induced_face, np.zeros(n - 1), x_max, control)
        sub_profiles.append((f.h, f.epsilon, sub))
        if f.h > 1e-12 * scale:
            pos_faces.append((f.h, float(f.epsilon), sub))
        for b in sub.breakpoints:
            breakpoints.append(math.sqrt(f.h * f.h + b * b))

    breakpoints = sorted(breakpoints)
    merged: list[float] = []
    for b in breakpoints:
        if not merged or b - merged[-1] > 1e-12 * scale:
            merged.append(b)

    if not pos_faces:
        # exact cone for all radii; nothing to integrate
        prof = RadialVolumeProfile(dimension=n, breakpoints=np.asarray(merged),
                                   omega=omega, omega_stderr=omega_err,
                                   faces=sub_profiles)
        grid = np.linspace(0.0, r_max, 33)
        prof.r_grid = grid
        prof.values = np.asarray(prof.value(grid))
        return prof

    r_start = 0.5 * min(h for h, _, _ in pos_faces)
    if r_start >= r_max:
        # requested range never leaves the exact cone regime
        prof = RadialVolumeProfile(dimension=n, breakpoints=np.asarray(merged),
                                   omega=omega, omega_stderr=omega_err,
                                   cone_r_end=r_max, faces=sub_profiles, r_max=r_max)
        prof.w_at_zero = prof.w_prime_at_zero = None
        grid = np.linspace(0.0, r_max, 33)
        prof.r_grid = grid
        prof.values = np.asarray(prof.value(grid))
        return prof

    def rhs(r, y):
        total = 0.0
        for h, eps, sub in pos_faces:
            if r > h:
                total += eps * h * sub.value_scalar(math.sqrt(r * r - h * h))
        return ((n * y[0] - total) / r,)

    knots = [r_start] + [b for b in merged if r_start < b < r_max] + [r_max]
    interpolants = []
    ts = [0.0, r_start]
    ys = [0.0, omega * delta * r_start ** n]
    v = ys[-1]
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi - lo <= 1e-14 * scale:
            continue
        # absolute floor at the segment-start scale; rtol dominates as V grows
        atol = control.atol_factor * delta * lo ** n
        sol = solve_ivp(rhs, (lo, hi), [v], method="RK45", dense_output=True,
                        rtol=control.rtol, atol=atol)
        if not sol.success:
            raise NumericalError(
                f"step controller failed near r={sol.t[-1]:.6g}: {sol.message}")
        interpolants.extend(sol.sol.interpolants)
        ts.extend(float(x) for x in sol.t[1:])
        ys.extend(float(x) for x in sol.y[0, 1:])
        v = float(sol.y[0, -1])

    table = _DenseTable(interpolants) if interpolants else None
    prof = RadialVolumeProfile(dimension=n, breakpoints=np.asarray(merged),
                               omega=omega, omega_stderr=omega_err,
                               cone_r_end=r_start, table=table,
                               faces=sub_profiles, r_max=r_max)
    prof.w_at_zero = prof.w_prime_at_zero = None
    prof.r_grid = np.asarray(ts)
    prof.values = np.maximum(np.asarray(ys), 0.0)
    return prof


# ---------------------------------------------------------------------------
# Laurent coefficients of the profile at infinity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitWindow:
    """Geometric radius grid for large-radius coefficient fits."""

    r_min: float
    r_max: float
    count: int = 32

    def radii(self) -> np.ndarray:
        if not (0 < self.r_min < self.r_max) or self.count < 2:
            raise InputError("fit window needs 0 < r_min < r_max and count >= 2")
        return np.geomspace(self.r_min, self.r_max, self.count)


def fit_radial_powers(evaluate, n: int, terms: int, window: FitWindow,
                      cond_bound: float = 1e8):
    """Least squares of V(r) against a_n r^n + ... + a_{n-terms+1} r^{n-terms+1}.

    The regression runs on V(r)/r^n against inverse powers of r so rows carry
    comparable (relative) weight.  Returns (coefficients descending by power,
    rms residual in relative units, condition estimate).
    """
    radii = window.radii()
    vals = np.asarray([float(evaluate(r)) for r in radii])
    y = vals / radii ** n
    X = np.column_stack([radii ** (-k) for k in range(terms)])
    cond = float(np.linalg.cond(X))
    if cond > cond_bound:
        raise NumericalError(
            f"power fit ill-conditioned (cond {cond:.2e}); widen the window")
    coeffs, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coeffs - y) ** 2)))
    return coeffs, resid, cond


def default_fit_window(profile: RadialVolumeProfile,
                       leading_scale: float | None = None) -> FitWindow:
    """Window [R, 100R] with R = 10x the outermost breakpoint (or given scale)."""
    if leading_scale is None:
        leading_scale = float(profile.breakpoints[-1]) if profile.breakpoints.size else 1.0
    R = 10.0 * max(leading_scale, 1e-12)
    return FitWindow(r_min=R, r_max=100.0 * R)


def w_prime_at_zero(profile: RadialVolumeProfile,
                    window: FitWindow | None = None, terms: int = 4) -> float:
    """W'(0), the second Laurent coefficient of the profile at infinity.

    Exact for cone and interval profiles; otherwise extracted by a
    least-squares fit over a geometric large-radius grid.  The fit caches
    w_at_zero and diagnostics on the profile.  Raises NumericalError when the
    profile does not extend over the window or the fit is ill-conditioned.
    """
    if profile.w_prime_at_zero is not None and window is None:
        return profile.w_prime_at_zero
    if profile.table is None and profile.interval is None and profile.w_at_zero is not None:
        return profile.w_prime_at_zero
    win = window or default_fit_window(profile)
    if win.r_max > profile.r_max * (1 + 1e-9):
        raise NumericalError(
            f"fit window reaches r={win.r_max:g} but the profile stops at "
            f"{profile.r_max:g}; rebuild with a larger r_max")
    coeffs, resid, cond = fit_radial_powers(profile.value_scalar, profile.dimension,
                                            terms, win)
    profile.w_at_zero = float(coeffs[0])
    profile.w_prime_at_zero = float(coeffs[1])
    profile.w_fit_diagnostics = {
        "window": (win.r_min, win.r_max, win.count),
        "residual_rms": resid,
        "condition": cond,
        "coefficients": coeffs.tolist(),
    }
    return profile.w_prime_at_zero


# ---------------------------------------------------------------------------
# the complementary-halfspace cancellation check
# ---------------------------------------------------------------------------

def check_ww_lemma(halfspaces, p0, step_control: StepControl | None = None,
                   window_factor: float = 10.0, span: float = 100.0) -> float:
    """Defect |W'_P(0) + W'_Pbar(0)| for P and its complementary-halfspace set.

    Requires k <= n halfspaces in general position (linearly independent
    normals).  The defect is analytically zero; the returned number is the
    numerical residual of the two fits.
    """
    hs = tuple(halfspaces)
    if not hs:
        return 0.0
    p0 = np.asarray(p0, dtype=float)
    n = hs[0].dimension
    k = len(hs)
    if k > n:
        raise GeometryError(f"need k <= n halfspaces, got k={k} in E^{n}")
    normals = np.array([h.normal for h in hs])
    if np.linalg.matrix_rank(normals, tol=1e-9) < k:
        raise GeometryError("halfspaces are not in general position "
                            "(normals linearly dependent)")
    P = PolyhedralSet(dimension=n, halfspaces=hs)
    Pbar = PolyhedralSet(dimension=n, halfspaces=tuple(h.flipped() for h in hs))

    offsets = np.array([h.offset for h in hs])
    slacks = offsets - normals @ p0
    h_max = float(np.max(np.abs(slacks)))
    # distance to the common intersection flat controls the fit window
    alpha = np.linalg.solve(normals @ normals.T, slacks)
    q0 = p0 + normals.T @ alpha
    reach = float(np.linalg.norm(q0 - p0))
    R = window_factor * max(h_max + reach, 1e-9)
    window = FitWindow(r_min=R, r_max=span * R)
    r_max = window.r_max * (1 + 1e-6)

    w1 = []
    for S in (P, Pbar):
        prof = volume_profile(S, p0, r_max, step_control)
        w1.append(w_prime_at_zero(prof, window))
    return abs(w1[0] + w1[1])


# ---------------------------------------------------------------------------
# Monte Carlo oracle
# ---------------------------------------------------------------------------

def mc_truncated_volume(P: PolyhedralSet, p0, r: float, samples: int,
                        seed: int) -> tuple[float, float]:
    """Hit-or-miss volume of P intersect B(p0, r): (estimate, stderr)."""
    if samples < 1:
        raise InputError("samples must be >= 1")
    p0 = np.asarray(p0, dtype=float)
    n = P.dimension
    delta = unit_ball_volume(n)
    ball = delta * r ** n
    A, b = P.constraint_arrays()
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    chunk = 500_000
    while done < samples:
        m = min(chunk, samples - done)
        g = rng.standard_normal((m, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True) + 1e-300
        t = rng.random(m) ** (1.0 / n)
        x = p0 + r * t[:, None] * g
        if A.shape[0] == 0:
            hits += m
        else:
            hits += int(np.count_nonzero(np.all(x @ A.T <= b, axis=1)))
        done += m
    p = hits / samples
    return ball * p, ball * math.sqrt(max(p * (1 - p), 0.0) / samples)


def profile_to_csv(profile: RadialVolumeProfile, path, radii=None) -> None:
    """Serialize a profile as CSV with columns r, V, dV/dr."""
    rr = np.asarray(radii if radii is not None else profile.r_grid, dtype=float)
    vv = np.asarray(profile.value(rr))
    dd = np.asarray(profile.derivative(rr))
    with open(path, "w") as fh:
        fh.write("r,V,dVdr\n")
        for r, v, d in zip(rr, vv, dd):
            fh.write(f"{r:.12g},{v:.12g},{d:.12g}\n")
