"""Adaptive integration of the game dynamics with boundary-escape detection.

Second-order fields are integrated as first-order systems on ``(position,
velocity)``.  Two charts are available: plain simplex coordinates and the
Euclidean coordinates ``xi = phi'(x)``.  Samples are always reported in simplex
coordinates; the chart coordinates are kept alongside when they were used.

The adaptive scheme is the Dormand-Prince 5(4) pair with a PI step-size
controller and its free fourth-order dense output.  A fixed-step classical RK4
scheme is kept for convergence-order checks.
"""

from __future__ import annotations

import enum
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import dynamics
from .dynamics import DynamicsSpec, FieldKind, PhasePoint
from .errors import BoundaryError, DomainError, InconclusiveError, NoPotentialError
from .kernels import classify_wellposedness


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float = 10.0
    scheme: str = "rk45"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = 0.5
    min_step: float = 1e-12
    sample_interval: float = 0.1
    boundary_epsilon: float = 1e-9
    chart: str | None = None          # "simplex", "euclidean" or None for the default
    constraint_projection: bool = False
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not (0 < self.min_step <= self.max_step):
            raise DomainError("need 0 < min_step <= max_step")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if not self.boundary_epsilon > 0:
            raise DomainError("boundary_epsilon must be positive")
        if not self.sample_interval > 0 or not self.t_end > 0:
            raise DomainError("t_end and sample_interval must be positive")
        if self.scheme not in ("rk45", "rk4"):
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.chart not in (None, "simplex", "euclidean"):
            raise DomainError(f"unknown chart {self.chart!r}")


class TerminationKind(enum.Enum):
    COMPLETED = "Completed"
    BOUNDARY_ESCAPE = "BoundaryEscape"
    STEP_UNDERFLOW = "StepUnderflow"
    FIELD_ERROR = "FieldError"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    t_star: float | None = None
    coordinate: tuple[int, int] | None = None     # (player, action), 0-based
    message: str = ""


@dataclass
class TrajectoryRecord:
    """Sampled trajectory.  Arrays have one row per sample; position and velocity
    columns are the player blocks concatenated in order."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    E: np.ndarray
    K: np.ndarray
    sizes: tuple[int, ...]
    chart: str
    termination: Termination
    xi: np.ndarray | None = None
    xidot: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    def blocks(self, row):
        return np.split(row, np.cumsum(self.sizes)[:-1])

    def position(self, i: int = -1):
        return self.blocks(self.x[i])

    def velocity(self, i: int = -1):
        return self.blocks(self.v[i])

    @property
    def max_drift(self) -> float:
        return float(self.stats.get("max_drift", 0.0))

    def columns(self) -> list[str]:
        xs = [f"x_{k + 1}_{a}" for k, m in enumerate(self.sizes) for a in range(m)]
        vs = [f"v_{k + 1}_{a}" for k, m in enumerate(self.sizes) for a in range(m)]
        return ["t", *xs, *vs, "E", "K"]

    def write_csv(self, out: IO[str]) -> None:
        """CSV with 17 significant digits and a closing termination comment."""
        out.write(",".join(self.columns()) + "\n")
        data = np.column_stack([self.t, self.x, self.v, self.E, self.K])
        for row in data:
            out.write(",".join(_fmt(v) for v in row) + "\n")
        term = self.termination
        t_star = "none" if term.t_star is None else _fmt(term.t_star)
        out.write(f"# termination={term.kind.value} t_star={t_star} "
                  f"max_drift={_fmt(self.max_drift)}\n")

    def to_csv(self, path) -> None:
        atomic_write(path, self.csv_text())

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# the system being integrated

def default_chart(spec: DynamicsSpec) -> str:
    if spec.kind is FieldKind.INERTIAL_EUCLIDEAN:
        return "euclidean"
    if spec.kind is not FieldKind.INERTIAL:
        return "simplex"
    for K in spec.kernels:
        if K.chart is None:
            return "simplex"
        try:
            if not classify_wellposedness(K).well_posed:
                return "simplex"
        except InconclusiveError:
            return "simplex"
    return "euclidean"


class _System:
    """Flat first-order system for one spec in one chart."""

    def __init__(self, spec: DynamicsSpec, chart: str, eps: float):
        if chart == "euclidean":
            if spec.kind not in (FieldKind.INERTIAL, FieldKind.INERTIAL_EUCLIDEAN):
                raise DomainError("only the inertial field has a Euclidean form")
            if any(K.chart is None for K in spec.kernels):
                raise DomainError("Euclidean chart needs a closed-form chart for every kernel")
        self.spec = spec
        self.chart = chart
        self.sizes = spec.sizes
        self.split_at = np.cumsum(self.sizes)[:-1]
        self.D = int(sum(self.sizes))
        self.second_order = spec.kind.second_order
        self.eps = eps
        self.potential = dynamics.has_potential(spec)
        if chart == "euclidean":
            # escape only makes sense where the chart image is bounded
            self.thresholds = [
                float(K.chart.forward(eps)) if np.isfinite(K.chart.lower) else -math.inf
                for K in spec.kernels]

    def blocks(self, flat):
        return np.split(flat, self.split_at)

    def rhs(self, t, y):
        D = self.D
        if not self.second_order:
            x = self.blocks(y)
            dynamics._interior_blocks(x)
            return np.concatenate(dynamics.replicator_field(self.spec.source, x))
        pos, vel = self.blocks(y[:D]), self.blocks(y[D:])
        if self.chart == "euclidean":
            acc = dynamics.inertial_field_euclidean(self.spec, pos, vel)
        else:
            acc = dynamics.acceleration(self.spec, pos, vel)
        return np.concatenate([y[D:], *acc])

    # conversions -------------------------------------------------------
    def from_phase_point(self, state: PhasePoint) -> np.ndarray:
        x = list(state.position)
        if not self.second_order:
            return np.concatenate(x)
        v = list(state.speeds())
        if self.chart == "euclidean":
            xi = [K.chart.forward(xk) for K, xk in zip(self.spec.kernels, x)]
            xid = [np.sqrt(K.d2(xk)) * vk for K, xk, vk in zip(self.spec.kernels, x, v)]
            return np.concatenate([*xi, *xid])
        return np.concatenate([*x, *v])

    def simplex_state(self, y):
        D = self.D
        if not self.second_order:
            x = self.blocks(y)
            try:
                v = dynamics.replicator_field(self.spec.source, x)
            except BoundaryError:
                v = [np.full_like(xk, np.nan) for xk in x]
            return x, v
        pos, vel = self.blocks(y[:D]), self.blocks(y[D:])
        if self.chart == "euclidean":
            x = [K.chart.inverse(p) for K, p in zip(self.spec.kernels, pos)]
            v = [K.scale(xk) * vk for K, xk, vk in zip(self.spec.kernels, x, vel)]
            return x, v
        return pos, vel

    def energies(self, y):
        x, v = self.simplex_state(y)
        if self.chart == "euclidean":
            K = 0.5 * float(np.sum(y[self.D:] ** 2))
        else:
            with np.errstate(all="ignore"):
                K = 0.5 * sum(float(np.sum(Kr.d2(xk) * vk**2))
                              for Kr, xk, vk in zip(self.spec.kernels, x, v))
        E = math.nan
        if self.potential:
            try:
                E = K - self.spec.source.potential(x)
            except NoPotentialError:
                pass
        return E, K

    def drift(self, y) -> float:
        x, _ = self.simplex_state(y)
        return max(abs(float(np.sum(xk)) - 1.0) for xk in x)

    def event(self, y):
        """Escape function: positive inside, <= 0 once a coordinate reaches the band."""
        D = self.D
        pos = self.blocks(y[:D])
        best, where = math.inf, None
        for k, p in enumerate(pos):
            if self.chart == "euclidean":
                g = p - self.thresholds[k]
            else:
                g = p - self.eps
            a = int(np.argmin(g))
            if g[a] < best:
                best, where = float(g[a]), (k, a)
        return best, where

    def project(self, y):
        D = self.D
        y = y.copy()
        if not self.second_order:
            x = [xk / np.sum(xk) for xk in self.blocks(y)]
            return np.concatenate(x)
        pos, vel = self.blocks(y[:D]), self.blocks(y[D:])
        if self.chart == "euclidean":
            new_pos, new_vel = [], []
            for K, p, w in zip(self.spec.kernels, pos, vel):
                x = K.chart.inverse(p)
                x = x / np.sum(x)
                s = K.scale(x)
                new_pos.append(K.chart.forward(x))
                new_vel.append(w - (w @ s) / (s @ s) * s)
            return np.concatenate([*new_pos, *new_vel])
        new_pos = [p / np.sum(p) for p in pos]
        new_vel = [w - w.mean() for w in vel]
        return np.concatenate([*new_pos, *new_vel])


# ---------------------------------------------------------------------------
# Dormand-Prince tableau

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# dense output: y(t0 + s h) = y0 + h K^T P [s, s^2, s^3, s^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class _DenseDP:
    def __init__(self, t0, h, y0, K):
        self.t0, self.h, self.y0 = t0, h, y0
        self.Q = K.T @ _P

    def __call__(self, t):
        s = (t - self.t0) / self.h
        return self.y0 + self.h * (self.Q @ np.array([s, s * s, s**3, s**4]))


class _DenseHermite:
    def __init__(self, t0, h, y0, y1, f0, f1):
        self.t0, self.h = t0, h
        self.y0, self.y1, self.f0, self.f1 = y0, y1, f0, f1

    def __call__(self, t):
        s = (t - self.t0) / self.h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * self.y0 + h10 * self.h * self.f0 + h01 * self.y1 + h11 * self.h * self.f1


def detect_escape(interpolant, event, t_lo: float, t_hi: float, tol: float = 1e-10) -> float:
    """Bisect ``event(interpolant(t))`` on ``[t_lo, t_hi]`` (positive at ``t_lo``,
    nonpositive at ``t_hi``) and return the right end once the bracket is below
    ``tol`` -- the first time the state is inside the boundary band."""
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if mid <= t_lo or mid >= t_hi:
            break
        if event(interpolant(mid)) > 0:
            t_lo = mid
        else:
            t_hi = mid
    return t_hi


# ---------------------------------------------------------------------------
# driver

def _sample_times(t_end: float, dt: float) -> np.ndarray:
    n = int(math.floor(t_end / dt + 1e-9))
    ts = np.arange(n + 1) * dt
    if t_end - ts[-1] > 1e-12 * max(1.0, t_end):
        ts = np.append(ts, t_end)
    else:
        ts[-1] = min(ts[-1], t_end)
    return ts


class _Collector:
    def __init__(self, system: _System, times: np.ndarray):
        self.system = system
        self.times = times
        self.next = 0
        self.rows_t, self.rows_y = [], []

    def add(self, t, y):
        self.rows_t.append(float(t))
        self.rows_y.append(np.array(y, dtype=float))

    def emit_until(self, t_hi, interp, inclusive=True):
        while self.next < len(self.times):
            ts = self.times[self.next]
            if ts > t_hi or (not inclusive and ts >= t_hi):
                break
            self.add(ts, interp(ts))
            self.next += 1


def integrate(spec: DynamicsSpec, initial: PhasePoint,
              config: IntegratorConfig = IntegratorConfig()) -> TrajectoryRecord:
    """Integrate ``spec`` from ``initial`` and return the sampled trajectory.

    Step underflow and field failures end the run and are reported in the
    record's termination rather than raised.
    """
    chart = config.chart or default_chart(spec)
    system = _System(spec, chart, config.boundary_epsilon)
    if len(initial.position) != len(system.sizes) or any(
            p.size != m for p, m in zip(initial.position, system.sizes)):
        raise DomainError("initial state does not match the game's action sets")
    for p in initial.position:
        if not np.min(p) > config.boundary_epsilon:
            raise BoundaryError("initial position must be interior")
    y = system.from_phase_point(initial)
    t = float(initial.time)
    t_end = t + config.t_end
    collector = _Collector(system, t + _sample_times(config.t_end, config.sample_interval))
    stats = {"accepted": 0, "rejected": 0, "rhs_evals": 0, "max_drift": system.drift(y)}

    def f(tt, yy):
        stats["rhs_evals"] += 1
        out = system.rhs(tt, yy)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite field value")
        return out

    termination = None
    collector.add(t, y)
    collector.next = 1
    try:
        f0 = f(t, y)
    except Exception as exc:  # noqa: BLE001 - any failure of the field is reported
        termination = Termination(TerminationKind.FIELD_ERROR, message=str(exc))
        f0 = None

    adaptive = config.scheme == "rk45"
    h = config.max_step if not adaptive else _initial_step(y, f0, config) if f0 is not None else 0.0
    err_prev = 1e-4
    steps = 0
    while termination is None and t < t_end:
        if steps >= config.max_steps:
            termination = Termination(TerminationKind.STEP_UNDERFLOW, message="step budget exhausted")
            break
        steps += 1
        h = min(h, config.max_step, t_end - t)
        if t_end - t - h < 1e-14 * max(1.0, abs(t_end)):
            h = t_end - t
        try:
            if adaptive:
                y_new, f_new, err, interp = _dp_step(f, t, y, f0, h, config)
            else:
                y_new, f_new, interp = _rk4_step(f, t, y, f0, h)
                err = 0.0
        except BoundaryError:
            stats["rejected"] += 1
            h *= 0.25
            if h < config.min_step:
                termination = Termination(TerminationKind.STEP_UNDERFLOW, message="boundary rejections")
            continue
        except Exception as exc:  # noqa: BLE001
            termination = Termination(TerminationKind.FIELD_ERROR, message=str(exc))
            break

        if adaptive and not (err <= 1.0):
            stats["rejected"] += 1
            fac = 0.2 if not np.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h *= fac
            if h < config.min_step:
                termination = Termination(TerminationKind.STEP_UNDERFLOW,
                                          message=f"step {h:.3e} below min_step")
            continue

        t_old = t
        t = t_end if (t_end - (t_old + h)) <= 1e-14 * max(1.0, abs(t_end)) else t_old + h
        stats["accepted"] += 1
        if config.constraint_projection:
            y_new = system.project(y_new)
            try:
                f_new = f(t, y_new)
            except Exception as exc:  # noqa: BLE001
                termination = Termination(TerminationKind.FIELD_ERROR, message=str(exc))
                break
        g_new, _ = system.event(y_new)
        if g_new <= 0:
            ev = lambda yy: system.event(yy)[0]
            t_star = detect_escape(interp, ev, t_old, t)
            y_star = y_new if t_star >= t else interp(t_star)
            collector.emit_until(t_star, interp, inclusive=False)
            collector.add(t_star, y_star)
            stats["max_drift"] = max(stats["max_drift"], system.drift(y_star))
            termination = Termination(TerminationKind.BOUNDARY_ESCAPE, t_star=float(t_star),
                                      coordinate=system.event(y_star)[1])
            break
        collector.emit_until(t, interp)
        stats["max_drift"] = max(stats["max_drift"], system.drift(y_new))
        y, f0 = y_new, f_new
        if adaptive:
            err = max(err, 1e-10)
            fac = 0.9 * err ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            h *= min(5.0, max(0.2, fac))
            err_prev = err
            if h < config.min_step and t < t_end:
                termination = Termination(TerminationKind.STEP_UNDERFLOW,
                                          message=f"step {h:.3e} below min_step")
    if termination is None:
        termination = Termination(TerminationKind.COMPLETED)
    return _build_record(system, collector, termination, stats)


def _initial_step(y, f0, config):
    scale = config.abs_tol + config.rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return float(min(max(h0, config.min_step), config.max_step, 1e-2))


def _dp_step(f, t, y, f0, h, config):
    K = np.empty((7, y.size))
    K[0] = f0
    for s in range(1, 6):
        K[s] = f(t + _C[s] * h, y + h * (_A[s] @ K[:s]))
    y_new = y + h * (_B @ K[:6])
    K[6] = f(t + h, y_new)
    scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    err = float(np.sqrt(np.mean((h * (_E @ K) / scale) ** 2)))
    return y_new, K[6], err, _DenseDP(t, h, y, K)


def _rk4_step(f, t, y, f0, h):
    k1 = f0
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    f_new = f(t + h, y_new)
    return y_new, f_new, _DenseHermite(t, h, y, y_new, f0, f_new)


def _build_record(system: _System, collector: _Collector, termination, stats) -> TrajectoryRecord:
    ts = np.array(collector.rows_t)
    X, V, E, Kin, XI, XID = [], [], [], [], [], []
    for y in collector.rows_y:
        x, v = system.simplex_state(y)
        X.append(np.concatenate(x))
        V.append(np.concatenate(v))
        e, k = system.energies(y)
        E.append(e)
        Kin.append(k)
        if system.chart == "euclidean":
            XI.append(y[:system.D])
            XID.append(y[system.D:])
    stats["max_drift"] = max([stats["max_drift"]] + [
        abs(float(np.sum(b)) - 1.0) for row in X for b in np.split(row, system.split_at)])
    return TrajectoryRecord(
        t=ts, x=np.array(X), v=np.array(V), E=np.array(E), K=np.array(Kin),
        sizes=tuple(system.sizes), chart=system.chart, termination=termination,
        xi=np.array(XI) if XI else None, xidot=np.array(XID) if XID else None,
        stats=stats)


def sample_dense(record: TrajectoryRecord, times) -> tuple[np.ndarray, np.ndarray]:
    """Cubic Hermite interpolation of stored positions and velocities.

    Returns ``(x, v)`` arrays with one row per requested time; stored nodes are
    returned exactly.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size and (times.min() < record.t[0] or times.max() > record.t[-1]):
        raise DomainError("requested times lie outside the integrated range")
    if len(record.t) == 1:
        return np.repeat(record.x, times.size, axis=0), np.repeat(record.v, times.size, axis=0)
    spline = CubicHermiteSpline(record.t, record.x, record.v, axis=0)
    xs, vs = spline(times), spline.derivative()(times)
    idx = np.searchsorted(record.t, times)
    for j, (i, tt) in enumerate(zip(idx, times)):
        if i < len(record.t) and record.t[i] == tt:
            xs[j], vs[j] = record.x[i], record.v[i]
    return xs, vs
