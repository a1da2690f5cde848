"""Executable checks and experiment batteries over trajectories.

Every check returns a :class:`CheckReport` whose ``passed`` flag is exactly
"metric within threshold"; preconditions that fail produce a failing report
with the reason in ``details`` rather than an exception.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import qmc

from . import games
from .dynamics import DynamicsSpec, FieldKind, PhasePoint, quadratic_objective, restricted_field_norm
from .errors import ConfigError, DomainError, InconclusiveError
from .integrator import IntegratorConfig, TerminationKind, TrajectoryRecord, integrate
from .kernels import classify_wellposedness, get_kernel, riemannian_norm


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    metric: float
    threshold: float
    details: str = ""

    def to_dict(self) -> dict:
        metric = self.metric if math.isfinite(self.metric) else None
        return {"name": self.name, "passed": bool(self.passed),
                "metric": metric, "threshold": self.threshold}


def _below(name, metric, threshold, details="") -> CheckReport:
    metric = float(metric)
    return CheckReport(name, bool(metric < threshold), metric, float(threshold), details)


def _failed(name, threshold, details) -> CheckReport:
    return CheckReport(name, False, math.nan, float(threshold), details)


# ---------------------------------------------------------------------------
# trajectory checks

def _central_difference(t, y):
    """Second-order derivative estimate at the interior samples of a nonuniform grid."""
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    return (-h1 / (h0 * (h0 + h1)) * y[:-2]
            + (h1 - h0) / (h0 * h1) * y[1:-1]
            + h0 / (h1 * (h0 + h1)) * y[2:])


def check_energy_dissipation(record: TrajectoryRecord, eta: float,
                             threshold: float = 1e-3) -> CheckReport:
    """Compare the central-difference ``dE/dt`` with ``-2 eta K``.

    The deviation is measured relative to ``max 2 eta K`` over the run (or to
    ``1 + |E(0)|`` when ``eta = 0``, where the target rate is zero).
    """
    name = "energy-dissipation"
    t, E, K = record.t, record.E, record.K
    if len(t) < 3:
        raise DomainError("energy check needs at least three samples")
    if not np.all(np.isfinite(E)):
        return _failed(name, threshold, "record carries no energies (no potential)")
    dE = _central_difference(t, E)
    target = -2.0 * eta * K[1:-1]
    scale = 2.0 * eta * float(np.max(K)) if eta > 0 else 0.0
    if scale <= 0:
        scale = 1.0 + abs(float(E[0]))
    metric = float(np.max(np.abs(dE - target))) / scale
    rises = float(np.max(np.diff(E), initial=0.0))
    return _below(name, metric, threshold, f"largest energy increase between samples {rises:.3e}")


def check_energy_conservation(record: TrajectoryRecord, threshold: float = 1e-6) -> CheckReport:
    name = "energy-conservation"
    E = record.E
    if not np.all(np.isfinite(E)):
        return _failed(name, threshold, "record carries no energies (no potential)")
    metric = float(np.max(np.abs(E - E[0]))) / (1.0 + abs(float(E[0])))
    return _below(name, metric, threshold)


def check_velocity_decay(record: TrajectoryRecord, threshold: float = 1e-3) -> CheckReport:
    """Riemannian speed at the final sample, plus a tail test on the action integral."""
    name = "velocity-decay"
    if record.termination.kind is not TerminationKind.COMPLETED:
        return _failed(name, threshold, f"run ended with {record.termination.kind.value}")
    speed = math.sqrt(max(2.0 * float(record.K[-1]), 0.0))
    t, K = record.t, record.K
    total = float(trapezoid(K, t))
    cut = t[0] + 0.8 * (t[-1] - t[0])
    tail_mask = t >= cut
    tail = float(trapezoid(K[tail_mask], t[tail_mask])) if tail_mask.sum() > 1 else 0.0
    settled = total == 0.0 or tail < 0.01 * total
    return _below(name, speed, threshold,
                  f"integral of K {total:.6g}; last 20% contributes {tail:.3e} "
                  f"({'converged' if settled else 'not converged'})")


def restricted_criticality_residual(partials, x, support_tol: float = games.SUPPORT_THRESHOLD) -> float:
    """Largest spread of the partials over each player's support.

    ``partials`` and ``x`` are either single arrays or per-player lists of arrays.
    """
    if isinstance(x, np.ndarray) and x.ndim == 1:
        x, partials = [x], [partials]
    worst = 0.0
    for xk, dk in zip(x, partials):
        xk = np.asarray(xk, dtype=float)
        dk = np.asarray(dk, dtype=float)
        supported = dk[xk > support_tol]
        if supported.size > 1:
            worst = max(worst, float(np.ptp(supported)))
    return worst


def distance_to(record: TrajectoryRecord, x_star) -> np.ndarray:
    target = np.concatenate([np.asarray(b, dtype=float) for b in _blocks(x_star)])
    return np.max(np.abs(record.x - target), axis=1)


def check_convergence_to_point(record: TrajectoryRecord, x_star, tol: float = 1e-3,
                               slack: float = 1e-6) -> CheckReport:
    """Final max-coordinate distance to ``x_star``; the approach over the last
    20% of samples must also be nonincreasing up to ``slack``."""
    name = "convergence"
    if record.termination.kind is not TerminationKind.COMPLETED:
        return _failed(name, tol, f"run ended with {record.termination.kind.value}")
    d = distance_to(record, x_star)
    start = int(math.floor(0.8 * (len(d) - 1)))
    tail = d[start:]
    rise = float(np.max(np.diff(tail), initial=0.0))
    metric = float(d[-1])
    monotone = rise <= slack
    report = _below(name, metric, tol, f"largest rise over the final 20%: {rise:.3e}")
    if not monotone:
        report = replace(report, passed=False,
                         details=report.details + " (approach is not monotone)")
    return report


# ---------------------------------------------------------------------------
# closed forms for the two-action zero game

def _check_xi0(xi0):
    if not 0.0 < xi0 < 2.0:
        raise DomainError("need 0 < xi0 < 2")


def shahshahani_closed_form(t, xi0: float, v0: float):
    """Euclidean coordinate ``xi = 2 sqrt(x_1)`` of the force-free replicator-metric
    motion of the two-action zero game, started at ``xi0`` with ``d xi/dt = v0``."""
    _check_xi0(xi0)
    r = math.sqrt(4.0 - xi0 * xi0)
    w = v0 / r
    t = np.asarray(t, dtype=float)
    return xi0 * np.cos(w * t) + r * np.sin(w * t)


def shahshahani_exit_time(xi0: float, v0: float) -> float:
    """First time ``xi`` leaves ``(0, 2)``; ``inf`` when ``v0 = 0``."""
    _check_xi0(xi0)
    if v0 == 0:
        return math.inf
    r = math.sqrt(4.0 - xi0 * xi0)
    w = abs(v0) / r
    phase = math.asin(xi0 / 2.0)
    return (0.5 * math.pi - phase) / w if v0 > 0 else phase / w


def log_barrier_invariant(x1, x1dot):
    """Conserved quantity of the force-free log-barrier motion on two actions,
    written in ``xi = log x_1``."""
    x1 = np.asarray(x1, dtype=float)
    xi = np.log(x1)
    xidot = np.asarray(x1dot, dtype=float) / x1
    e = np.exp(xi)
    return xidot * np.sqrt(1.0 - 2.0 * e + 2.0 * e * e) / (1.0 - e)


def check_log_barrier_invariant(record: TrajectoryRecord, threshold: float = 1e-4,
                                exclusion: float = 1e-3) -> CheckReport:
    """Relative variation of the first integral over the samples.

    Samples with ``|1 - x_1| < exclusion`` are skipped.  When the constant is
    zero the absolute variation is reported instead.
    """
    name = "log-barrier-first-integral"
    if record.sizes != (2,):
        raise DomainError("needs a single player with two actions")
    x1, v1 = record.x[:, 0], record.v[:, 0]
    keep = np.abs(1.0 - x1) >= exclusion
    if keep.sum() < 2:
        return _failed(name, threshold, "too few usable samples")
    C = log_barrier_invariant(x1[keep], v1[keep])
    if not np.all(np.isfinite(C)):
        return _failed(name, threshold, "non-finite invariant values")
    C0 = float(C[0])
    spread = float(np.max(np.abs(C - C0)))
    metric = spread / abs(C0) if C0 != 0 else spread
    return _below(name, metric, threshold, f"C0 = {C0:.12g}, {int(keep.sum())} samples")


# ---------------------------------------------------------------------------
# sampled starts and parallel runs

def _blocks(x) -> list[np.ndarray]:
    if isinstance(x, np.ndarray) and x.ndim == 1:
        return [x]
    if len(x) and np.isscalar(x[0]):
        return [np.asarray(x, dtype=float)]
    return [np.asarray(b, dtype=float) for b in x]


def _simplex_from_unit(u):
    """Uniform simplex point from ``len(u)`` numbers in ``[0, 1)`` (sorted spacings)."""
    cuts = np.concatenate([[0.0], np.sort(u), [1.0]])
    return np.diff(cuts)


def nearby_starts(x_star, kernels, count: int = 10, radius: float = 0.05,
                  speed: float = 0.01, seed: int = 0) -> list[PhasePoint]:
    """Quasi-random interior starts within max-coordinate distance ``radius`` of
    ``x_star`` and with total Riemannian speed at most ``speed``.

    Positions are ``(1 - lam) x* + lam z`` with ``z`` uniform on the simplex and
    ``lam = radius * u``; velocities point in a random tangent direction.
    """
    blocks = _blocks(x_star)
    kernels = list(kernels) if len(kernels) == len(blocks) else [kernels[0]] * len(blocks)
    dims = sum((m - 1) + m for m in (b.size for b in blocks)) + 2
    sampler = qmc.Halton(d=dims, scramble=True, seed=seed)
    # skip the first point, which sits in a corner of the unit cube for small d
    pts = sampler.random(count + 1)[1:]
    out = []
    for row in pts:
        lam = radius * (0.05 + 0.95 * row[0])
        spd = speed * row[1]
        i = 2
        pos, dirs = [], []
        for b in blocks:
            m = b.size
            z = _simplex_from_unit(row[i:i + m - 1])
            i += m - 1
            z = np.clip(z, 1e-3, None)
            z /= z.sum()
            pos.append((1.0 - lam) * b + lam * z)
            d = row[i:i + m] - 0.5
            i += m
            dirs.append(d - d.mean())
        norm2 = sum(riemannian_norm(K, p, d) ** 2 for K, p, d in zip(kernels, pos, dirs))
        factor = spd / math.sqrt(norm2) if norm2 > 0 else 0.0
        out.append(PhasePoint(tuple(pos), tuple(d * factor for d in dirs)))
    return out


def thread_count() -> int:
    raw = os.environ.get("INERTIA_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"INERTIA_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ConfigError("INERTIA_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


def run_many(fn: Callable, items: Sequence) -> list:
    """``[fn(item) for item in items]`` on a thread pool, results in input order."""
    items = list(items)
    workers = min(thread_count(), max(len(items), 1))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# experiment batteries

@dataclass(frozen=True)
class ProbeScenario:
    """Parameters for low-speed basin probes and limit checks."""

    t_end: float = 200.0
    starts: int = 10
    radius: float = 0.05
    speed: float = 0.01
    seed: int = 0
    convergence_tol: float = 1e-3
    stationarity_tol: float = 1e-10
    criticality_tol: float = 1e-5
    interior_runs: int = 4
    support_tol: float = 1e-2
    sample_interval: float = 1.0
    max_step: float = 0.5


def _require_well_posed(spec: DynamicsSpec) -> str | None:
    if spec.kind not in (FieldKind.INERTIAL, FieldKind.INERTIAL_EUCLIDEAN):
        return "battery needs the inertial field"
    for K in spec.kernels:
        try:
            if not classify_wellposedness(K).well_posed:
                return f"kernel {K.name} is ill-posed"
        except InconclusiveError:
            return f"kernel {K.name} could not be classified"
    return None


def _probe(spec, x_star, scenario: ProbeScenario, seed_offset: int = 0):
    starts = nearby_starts(x_star, spec.kernels, scenario.starts, scenario.radius,
                           scenario.speed, scenario.seed + seed_offset)
    config = IntegratorConfig(t_end=scenario.t_end, sample_interval=scenario.sample_interval,
                              max_step=scenario.max_step)
    records = run_many(lambda st: integrate(spec, st, config), starts)
    return [check_convergence_to_point(r, x_star, scenario.convergence_tol) for r in records]


def _aggregate(name, reports, threshold, extra="") -> CheckReport:
    metrics = [r.metric for r in reports]
    metric = max(metrics) if metrics else 0.0
    failing = [i for i, r in enumerate(reports) if not r.passed]
    details = f"{len(reports)} starts" + (f"; failing starts {failing}" if failing else "")
    if extra:
        details += "; " + extra
    passed = not failing and (math.isfinite(metric) or not reports)
    return CheckReport(name, passed, float(metric), float(threshold), details)


def _label(game, x) -> str:
    parts = []
    for k, xk in enumerate(x):
        if np.max(xk) > 1 - 1e-12:
            a = int(np.argmax(xk))
            names = getattr(game, "names", None)
            parts.append(names[a] if names else str(a))
        else:
            parts.append("(" + ",".join(f"{v:.4g}" for v in xk) + ")")
    return "/".join(parts)


def _converged(record: TrajectoryRecord) -> bool:
    if record.termination.kind is not TerminationKind.COMPLETED:
        return False
    if math.sqrt(max(2.0 * float(record.K[-1]), 0.0)) >= 1e-6:
        return False
    start = int(math.floor(0.9 * (len(record.t) - 1)))
    drift = np.max(np.abs(record.x[start:] - record.x[-1]))
    return bool(drift < 1e-8)


def folk_theorem_suite(game: games.NormalFormGame, spec: DynamicsSpec,
                       scenario: ProbeScenario = ProbeScenario()) -> list[CheckReport]:
    """Stationarity at restricted equilibria, criticality of converged limits, and
    low-speed basin probes around each strict equilibrium."""
    reason = _require_well_posed(spec)
    if reason:
        return [_failed("folk-theorem", scenario.convergence_tol, reason)]
    reports = []
    for x in games.restricted_equilibria(game):
        norm = restricted_field_norm(spec, x)
        reports.append(_below(f"stationarity[{_label(game, x)}]", norm, scenario.stationarity_tol))

    # limits of interior runs: record criticality and Nash status
    interior = nearby_starts(game.uniform_profile(), spec.kernels, scenario.interior_runs,
                             radius=0.9, speed=scenario.speed, seed=scenario.seed + 7919)
    config = IntegratorConfig(t_end=scenario.t_end, sample_interval=scenario.sample_interval,
                              max_step=scenario.max_step)
    runs = run_many(lambda st: integrate(spec, st, config), interior)
    residuals, nash = [], []
    for r in runs:
        if not _converged(r):
            continue
        limit = r.position(-1)
        v = games.payoff_vectors(game, limit)
        residuals.append(restricted_criticality_residual(v, limit, scenario.support_tol))
        nash.append(bool(games.is_nash(game, limit, tol=1e-6)))
    details = (f"{len(residuals)} of {len(runs)} runs converged; "
               f"non-Nash limits: {nash.count(False)}")
    reports.append(_below("limit-criticality", max(residuals, default=0.0),
                          scenario.criticality_tol, details))

    for i, eq in enumerate(games.enumerate_pure_strict_equilibria(game)):
        x_star = game.pure_profile(eq)
        probes = _probe(spec, x_star, scenario, seed_offset=i)
        reports.append(_aggregate(f"basin[{_label(game, x_star)}]", probes,
                                  scenario.convergence_tol))
    return reports


def ess_stability_experiment(sym_game: games.SymmetricGame, x_star, kernel="log-barrier",
                             friction: float = 1.0,
                             scenario: ProbeScenario = ProbeScenario(t_end=300.0)) -> CheckReport:
    """Single-population probes around an ESS of a doubly symmetric game."""
    name = "ess-stability"
    K = get_kernel(kernel) if isinstance(kernel, str) else kernel
    x_star = np.asarray(x_star, dtype=float)
    if sym_game.symmetric_shift() is None:
        return _failed(name, scenario.convergence_tol,
                       "payoff matrix is not symmetric up to column shifts")
    if not friction > 0:
        return _failed(name, scenario.convergence_tol, "needs positive friction")
    verdict = games.ess_check(sym_game, x_star, seed=scenario.seed)
    if not verdict:
        return _failed(name, scenario.convergence_tol, f"x* fails the ESS check ({verdict.worst:.3e})")
    spec = DynamicsSpec(FieldKind.INERTIAL, sym_game, (K,), friction)
    reason = _require_well_posed(spec)
    if reason:
        return _failed(name, scenario.convergence_tol, reason)
    probes = _probe(spec, [x_star], scenario)
    return _aggregate(name, probes, scenario.convergence_tol)


# ---------------------------------------------------------------------------
# suites

def _simulate(spec, start, t_end, sample_interval, **kw):
    return integrate(spec, start, IntegratorConfig(t_end=t_end, sample_interval=sample_interval, **kw))


def _battery_closed_form(p: dict, seed: int) -> list[CheckReport]:
    xi0 = float(p.get("xi0", 1.0))
    v0 = float(p.get("v0", 1.0))
    x1 = xi0 * xi0 / 4.0
    spec = DynamicsSpec(FieldKind.INERTIAL, games.zero_game(2), (get_kernel("shahshahani"),))
    xdot = v0 * xi0 / 2.0
    start = PhasePoint(([x1, 1.0 - x1],), ([xdot, -xdot],))
    t_star = shahshahani_exit_time(xi0, v0)
    record = _simulate(spec, start, min(2.0 * t_star, 100.0), float(p.get("sample_interval", 0.01)))
    mask = record.t <= 0.9 * t_star
    err = float(np.max(np.abs(2.0 * np.sqrt(record.x[mask, 0])
                              - shahshahani_closed_form(record.t[mask], xi0, v0))))
    out = [_below("closed-form-trajectory", err, float(p.get("threshold", 1e-6)))]
    term = record.termination
    if term.kind is TerminationKind.BOUNDARY_ESCAPE:
        out.append(_below("closed-form-escape-time", abs(term.t_star - t_star),
                          float(p.get("escape_threshold", 1e-4)),
                          f"analytic {t_star:.10g}, simulated {term.t_star:.10g}"))
    else:
        out.append(_failed("closed-form-escape-time", float(p.get("escape_threshold", 1e-4)),
                           f"no escape ({term.kind.value})"))
    return out


def _game_or_objective(p: dict):
    if "objective_center" in p:
        return quadratic_objective(p["objective_center"], float(p.get("objective_weight", 1.0)))
    game = games.load_game(p.get("game", "coordination_2x2"))
    return game


def _spec_from(p: dict, default_friction: float) -> DynamicsSpec:
    source = _game_or_objective(p)
    try:
        kernel = get_kernel(p.get("kernel", "log-barrier"))
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    return DynamicsSpec(p.get("field", "id"), source, (kernel,), float(p.get("friction", default_friction)))


def _battery_energy(p: dict, seed: int) -> list[CheckReport]:
    spec = _spec_from(p, 0.0)
    sizes = spec.sizes
    starts = nearby_starts([np.full(m, 1.0 / m) for m in sizes], spec.kernels, 1,
                           radius=0.5, speed=float(p.get("speed", 0.5)), seed=seed)
    record = _simulate(spec, starts[0], float(p.get("t_end", 100.0)),
                       float(p.get("sample_interval", 0.05)))
    if spec.friction == 0:
        return [check_energy_conservation(record, float(p.get("threshold", 1e-6)))]
    return [check_energy_dissipation(record, spec.friction, float(p.get("threshold", 1e-3)))]


def _battery_velocity(p: dict, seed: int) -> list[CheckReport]:
    if "game" not in p and "objective_center" not in p:
        p = {**p, "objective_center": [0.5, 0.3, 0.2]}
    spec = _spec_from(p, 1.0)
    count = int(p.get("starts", 10))
    sizes = spec.sizes
    starts = nearby_starts([np.full(m, 1.0 / m) for m in sizes], spec.kernels, count,
                           radius=0.9, speed=float(p.get("speed", 0.5)), seed=seed)
    t_end = float(p.get("t_end", 300.0))
    threshold = float(p.get("threshold", 1e-3))
    records = run_many(lambda st: _simulate(spec, st, t_end, 1.0), starts)
    return [_aggregate("velocity-decay", [check_velocity_decay(r, threshold) for r in records],
                       threshold)]


def _battery_convergence(p: dict, seed: int) -> list[CheckReport]:
    center = np.asarray(p.get("objective_center", [0.5, 0.3, 0.2]), dtype=float)
    spec = _spec_from({**p, "objective_center": center.tolist()}, 1.0)
    scenario = _scenario(p, seed, t_end=200.0)
    return [_aggregate("potential-convergence", _probe(spec, [center], scenario),
                       scenario.convergence_tol)]


def _battery_first_integral(p: dict, seed: int) -> list[CheckReport]:
    spec = DynamicsSpec(FieldKind.INERTIAL, games.zero_game(2), (get_kernel("log-barrier"),))
    x1 = float(p.get("x1", 0.25))
    v = float(p.get("velocity", 0.1))
    record = _simulate(spec, PhasePoint(([x1, 1 - x1],), ([v, -v],)),
                       float(p.get("t_end", 100.0)), float(p.get("sample_interval", 0.1)))
    return [check_log_barrier_invariant(record, float(p.get("threshold", 1e-4)))]


def _scenario(p: dict, seed: int, **defaults) -> ProbeScenario:
    fields = {f: p[f] for f in ProbeScenario.__dataclass_fields__ if f in p}
    if "threshold" in p:
        fields.setdefault("convergence_tol", p["threshold"])
    fields.setdefault("seed", seed)
    for k, v in defaults.items():
        fields.setdefault(k, v)
    try:
        return ProbeScenario(**fields)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _battery_folk(p: dict, seed: int) -> list[CheckReport]:
    game = games.load_game(p.get("game", "prisoners_dilemma"))
    if not isinstance(game, games.NormalFormGame):
        raise ConfigError("folk-theorem battery needs a normal-form game")
    spec = _spec_from(p, 1.0)
    return folk_theorem_suite(game, spec, _scenario(p, seed))


def _battery_ess(p: dict, seed: int) -> list[CheckReport]:
    game = games.load_game(p.get("game", "hawk_dove"))
    if not isinstance(game, games.SymmetricGame):
        raise ConfigError("ess battery needs a symmetric game")
    x_star = p.get("x_star", [0.5, 0.5])
    return [ess_stability_experiment(game, x_star, p.get("kernel", "log-barrier"),
                                     float(p.get("friction", 1.0)), _scenario(p, seed, t_end=300.0))]


BATTERIES = {
    "closed-form": _battery_closed_form,
    "energy": _battery_energy,
    "velocity-decay": _battery_velocity,
    "convergence": _battery_convergence,
    "first-integral": _battery_first_integral,
    "folk-theorem": _battery_folk,
    "ess": _battery_ess,
}

# Strict pure equilibria are approached at an algebraic rate under the
# log-barrier kernel (the losing coordinate decays like 1/t), so the basin
# probes here run long enough to get below the 1e-3 tolerance.
PAPER_CORE = {
    "name": "paper-core",
    "seed": 0,
    "batteries": [
        {"type": "closed-form", "xi0": 1.0, "v0": 1.0},
        {"type": "energy", "game": "coordination_2x2", "friction": 0.0},
        {"type": "energy", "game": "coordination_2x2", "friction": 1.0, "t_end": 20.0,
         "sample_interval": 0.01},
        {"type": "first-integral"},
        {"type": "velocity-decay"},
        {"type": "convergence"},
        {"type": "folk-theorem", "game": "prisoners_dilemma", "t_end": 1500.0, "max_step": 2.0,
         "sample_interval": 5.0},
        {"type": "folk-theorem", "game": "coordination_2x2", "t_end": 1500.0, "max_step": 2.0,
         "sample_interval": 5.0},
        {"type": "ess", "game": "hawk_dove", "x_star": [0.5, 0.5]},
    ],
}

BUILTIN_SUITES = {"paper-core": PAPER_CORE}


def load_suite(spec) -> dict:
    """Suite config from a built-in name, a JSON path, or a dict."""
    if isinstance(spec, dict):
        data = spec
    elif spec in BUILTIN_SUITES:
        data = BUILTIN_SUITES[spec]
    else:
        try:
            with open(spec) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read suite config {spec}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("batteries", []), list):
        raise ConfigError("suite config must be an object with a 'batteries' list")
    for b in data.get("batteries", []):
        if not isinstance(b, dict) or b.get("type") not in BATTERIES:
            raise ConfigError(f"unknown battery {b!r}; choose from {sorted(BATTERIES)}")
    return data


def run_suite(spec) -> list[CheckReport]:
    data = load_suite(spec)
    seed = int(data.get("seed", 0))
    reports: list[CheckReport] = []
    for i, battery in enumerate(data.get("batteries", [])):
        params = {k: v for k, v in battery.items() if k != "type"}
        try:
            reports.extend(BATTERIES[battery["type"]](params, seed + i))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise ConfigError(f"battery {battery['type']}: {exc}") from exc
    return reports


def summary_json(reports: Sequence[CheckReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
