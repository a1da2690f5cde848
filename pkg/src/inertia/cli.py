"""Command-line front end: ``inertia simulate | check-wellposed | equilibria | suite``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, games
from .dynamics import DynamicsSpec, FieldKind, PhasePoint
from .errors import ConfigError, InconclusiveError, InertiaError
from .integrator import IntegratorConfig, TerminationKind, atomic_write, integrate
from .kernels import (WELLPOSED_EPSILONS, classify_wellposedness, get_kernel, partial_integrals,
                      riemannian_norm)

EXIT_OK, EXIT_CONFIG, EXIT_FIELD, EXIT_CHECKS = 0, 1, 2, 3

_INTEGRATOR_KEYS = ("t_end", "scheme", "rel_tol", "abs_tol", "max_step", "min_step",
                    "sample_interval", "boundary_epsilon", "chart", "constraint_projection")


# ---------------------------------------------------------------------------
# state parsing

def _parse_blocks(text: str) -> list[np.ndarray]:
    try:
        return [np.array([float(v) for v in block.split(",")]) for block in text.split(";")]
    except ValueError:
        raise ConfigError(f"cannot parse state {text!r}; use '0.2,0.8;0.5,0.5'") from None


def _vertex_index(token: str, names) -> int:
    token = token.strip()
    if names and token in names:
        return list(names).index(token)
    try:
        return int(token)
    except ValueError:
        raise ConfigError(f"unknown action {token!r}") from None


def parse_position(value, sizes, names=None, seed: int = 0) -> list[np.ndarray]:
    """Explicit blocks, ``"uniform"``, ``"random"`` or ``"near:<vertex>:<distance>"``.

    ``<vertex>`` lists one action per player (index or name, comma separated);
    the start sits at max-coordinate distance ``<distance>`` from it, with the
    removed mass spread evenly over the other actions.
    """
    if value is None or value == "uniform":
        return [np.full(m, 1.0 / m) for m in sizes]
    if isinstance(value, list):
        blocks = [np.asarray(b, dtype=float) for b in (value if isinstance(value[0], list) else [value])]
    elif value == "random":
        start = analysis.nearby_starts([np.full(m, 1.0 / m) for m in sizes],
                                       [get_kernel("shahshahani")], 1, radius=0.9, speed=0.0,
                                       seed=seed)[0]
        return list(start.position)
    elif value.startswith("near:"):
        parts = value.split(":")
        if len(parts) != 3:
            raise ConfigError("near-vertex start must look like near:<vertex>:<distance>")
        tokens = parts[1].split(",")
        if len(tokens) != len(sizes):
            raise ConfigError(f"vertex needs one action per player ({len(sizes)})")
        try:
            d = float(parts[2])
        except ValueError:
            raise ConfigError(f"bad distance {parts[2]!r}") from None
        if not 0 < d < 1:
            raise ConfigError("distance must lie in (0, 1)")
        blocks = []
        for tok, m in zip(tokens, sizes):
            a = _vertex_index(tok, names)
            if not 0 <= a < m:
                raise ConfigError(f"action {a} out of range for {m} actions")
            b = np.full(m, d / (m - 1))
            b[a] = 1.0 - d
            blocks.append(b)
    else:
        blocks = _parse_blocks(value)
    if [b.size for b in blocks] != list(sizes):
        raise ConfigError(f"position blocks {[b.size for b in blocks]} do not match actions {list(sizes)}")
    return blocks


def parse_velocity(value, position, kernels, seed: int = 0) -> list[np.ndarray]:
    """Explicit blocks, ``"zero"``, ``"speed:<s>"`` or ``"random:<s>"``.

    ``speed:<s>`` moves each player along ``(1, -1, 0, ...)``; ``random:<s>`` picks
    a seeded tangent direction.  Both are scaled to total Riemannian speed ``s``.
    """
    if value is None:
        value = "speed:1"
    if isinstance(value, list):
        return [np.asarray(b, dtype=float) for b in (value if isinstance(value[0], list) else [value])]
    if value == "zero":
        return [np.zeros_like(p) for p in position]
    kind, _, amount = value.partition(":")
    if kind in ("speed", "random"):
        try:
            s = float(amount)
        except ValueError:
            raise ConfigError(f"bad speed in {value!r}") from None
        if kind == "speed":
            dirs = []
            for p in position:
                d = np.zeros_like(p)
                if p.size > 1:
                    d[0], d[1] = 1.0, -1.0
                dirs.append(d)
        else:
            rng = np.random.default_rng(seed)
            dirs = [rng.standard_normal(p.size) for p in position]
            dirs = [d - d.mean() for d in dirs]
        norm = math.sqrt(sum(riemannian_norm(K, p, d) ** 2
                             for K, p, d in zip(kernels, position, dirs)))
        return [d * (s / norm) if norm > 0 else d for d in dirs]
    return _parse_blocks(value)


# ---------------------------------------------------------------------------
# simulate

def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _merged(args, config: dict) -> dict:
    """Command-line flags override config-file entries."""
    out = dict(config)
    integ = dict(out.pop("integrator", {}) or {})
    for key in ("game", "field", "friction", "x0", "v0", "seed", "out", "summary", "figure"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    if args.kernel:
        out["kernels"] = args.kernel
    for key in _INTEGRATOR_KEYS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            integ[key] = val
    out["integrator"] = integ
    return out


def build_run(cfg: dict):
    """Resolve a merged run config into ``(spec, initial state, integrator config)``."""
    unknown = set(cfg) - {"game", "field", "kernels", "friction", "x0", "v0", "seed",
                          "out", "summary", "figure", "integrator"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "game" not in cfg:
        raise ConfigError("no game given")
    game = games.load_game(str(cfg["game"]))
    source_game = game
    try:
        kernels = tuple(get_kernel(k) for k in cfg.get("kernels", ["log-barrier"]))
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        kind = FieldKind.parse(str(cfg.get("field", "id")))
        spec = DynamicsSpec(kind, source_game, kernels, float(cfg.get("friction", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    seed = int(cfg.get("seed", 0))
    names = getattr(game, "names", None)
    try:
        x0 = parse_position(cfg.get("x0"), spec.sizes, names, seed)
        v0 = parse_velocity(cfg.get("v0"), x0, spec.kernels, seed)
        state = PhasePoint(tuple(x0), tuple(v0))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid initial state: {exc}") from exc
    integ = dict(cfg.get("integrator", {}))
    unknown = set(integ) - set(_INTEGRATOR_KEYS)
    if unknown:
        raise ConfigError(f"unknown integrator keys: {sorted(unknown)}")
    integ.setdefault("t_end", 10.0)
    try:
        config = IntegratorConfig(**integ)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid integrator settings: {exc}") from exc
    return spec, state, config


def _json_float(v):
    return None if v is None or not math.isfinite(v) else float(v)


def run_summary(record) -> dict:
    term = record.termination
    E = float(record.E[-1])
    return {
        "termination": term.kind.value,
        "t_star": _json_float(term.t_star),
        "exit_coordinate": list(term.coordinate) if term.coordinate else None,
        "final_state": {
            "t": float(record.t[-1]),
            "x": [b.tolist() for b in record.position(-1)],
            "v": [b.tolist() for b in record.velocity(-1)],
        },
        "final_energy": _json_float(E),
        "max_drift": float(record.max_drift),
        "message": term.message,
    }


def cmd_simulate(args) -> int:
    cfg = _merged(args, _load_config(args.config))
    spec, state, config = build_run(cfg)
    try:
        record = integrate(spec, state, config)
    except InertiaError as exc:
        raise ConfigError(str(exc)) from exc
    csv_text = record.csv_text()
    summary = json.dumps(run_summary(record), indent=2) + "\n"
    out = cfg.get("out")
    if out and out != "-":
        atomic_write(out, csv_text)
    else:
        sys.stdout.write(csv_text)
    if cfg.get("summary"):
        atomic_write(cfg["summary"], summary)
    elif out and out != "-":
        sys.stdout.write(summary)
    else:
        sys.stderr.write(summary)
    if cfg.get("figure"):
        from .plotting import trajectory_figure
        trajectory_figure(record, cfg["figure"], title=f"{cfg['game']} / {spec.kind.value}")
    if record.termination.kind is TerminationKind.FIELD_ERROR:
        print(f"field evaluation failed: {record.termination.message}", file=sys.stderr)
        return EXIT_FIELD
    return EXIT_OK


# ---------------------------------------------------------------------------
# other commands

def cmd_check_wellposed(args) -> int:
    try:
        kernel = get_kernel(args.kernel)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = classify_wellposedness(kernel)
    except InconclusiveError as exc:
        print(f"Inconclusive: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(result.verdict.value)
    print(f"method: {result.method}")
    eps = result.epsilons or WELLPOSED_EPSILONS
    values = result.partial_integrals or partial_integrals(kernel, eps)
    for e, value in zip(eps, values):
        print(f"  eps={e:.0e}  integral={value:.10g}")
    return EXIT_OK


def _profile_label(game, actions) -> str:
    names = getattr(game, "names", None)
    return "(" + ",".join(names[a] if names else str(a) for a in actions) + ")"


def cmd_equilibria(args) -> int:
    game = games.load_game(args.game)
    if isinstance(game, games.SymmetricGame):
        print("symmetric game; analysed as its two-player normal form")
        nf = game.as_normal_form()
    else:
        nf = game
    strict = games.enumerate_pure_strict_equilibria(nf)
    print("strict: [" + ", ".join(_profile_label(nf, s) for s in strict) + "]")
    cert = games.verify_potential(nf)
    print(f"potential: {'true' if cert.is_potential else 'false'} "
          f"(max residual {cert.max_residual:.3e})")
    for cand in args.candidate or []:
        x = _parse_blocks(cand)
        try:
            x = nf.check_profile(x)
        except ValueError as exc:
            raise ConfigError(f"candidate {cand!r}: {exc}") from exc
        nash = games.is_nash(nf, x)
        restricted = games.is_restricted_equilibrium(nf, x)
        print(f"candidate {cand}: nash={'yes' if nash else 'no'} "
              f"restricted={'yes' if restricted else 'no'}")
    return EXIT_OK


def cmd_suite(args) -> int:
    reports = analysis.run_suite(args.suite)
    text = analysis.summary_json(reports)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    for r in reports:
        if not r.passed:
            print(f"FAILED {r.name}: metric={r.metric:.3e} threshold={r.threshold:.1e} {r.details}",
                  file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECKS


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inertia", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one trajectory and write CSV + JSON summary")
    sim.add_argument("--config", help="JSON run config; flags override its entries")
    sim.add_argument("--game", help="built-in name (e.g. zero2, prisoners_dilemma) or JSON path")
    sim.add_argument("--field", choices=[k.value for k in FieldKind])
    sim.add_argument("--kernel", action="append", help="kernel name; repeat once per player")
    sim.add_argument("--friction", type=float)
    sim.add_argument("--x0", help="'uniform', 'random', 'near:<vertex>:<d>' or '0.2,0.8;...'")
    sim.add_argument("--v0", help="'zero', 'speed:<s>', 'random:<s>' or explicit blocks")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--t-end", dest="t_end", type=float)
    sim.add_argument("--sample-interval", dest="sample_interval", type=float)
    sim.add_argument("--scheme", choices=["rk45", "rk4"])
    sim.add_argument("--rel-tol", dest="rel_tol", type=float)
    sim.add_argument("--abs-tol", dest="abs_tol", type=float)
    sim.add_argument("--max-step", dest="max_step", type=float)
    sim.add_argument("--min-step", dest="min_step", type=float)
    sim.add_argument("--boundary-epsilon", dest="boundary_epsilon", type=float)
    sim.add_argument("--chart", choices=["simplex", "euclidean"])
    sim.add_argument("--project", dest="constraint_projection", action="store_true",
                     help="renormalize the simplex sums after each step")
    sim.add_argument("--out", help="CSV path (default: stdout)")
    sim.add_argument("--summary", help="JSON summary path")
    sim.add_argument("--figure", help="also render a PNG of the trajectory")
    sim.set_defaults(func=cmd_simulate)

    wp = sub.add_parser("check-wellposed", help="classify a kernel as well- or ill-posed")
    wp.add_argument("kernel")
    wp.set_defaults(func=cmd_check_wellposed)

    eq = sub.add_parser("equilibria", help="strict equilibria, potential certificate, candidate tests")
    eq.add_argument("game")
    eq.add_argument("--candidate", action="append", help="profile '0.5,0.5;0.5,0.5' to test")
    eq.set_defaults(func=cmd_equilibria)

    su = sub.add_parser("suite", help="run a check suite and emit a JSON report")
    su.add_argument("suite", help="built-in name (paper-core) or JSON path")
    su.add_argument("--out", help="JSON report path (default: stdout)")
    su.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InertiaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
