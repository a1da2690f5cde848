"""Finite normal-form games, symmetric games and equilibrium tests.

Payoff tensors are stored dense: ``payoffs[k][a_1, ..., a_N]`` is the payoff of
player ``k`` (0-based here) at the pure profile ``(a_1, ..., a_N)``.  A mixed
profile is a sequence of 1-D arrays, one simplex point per player.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .errors import ConfigError, DomainError

SUPPORT_THRESHOLD = 1e-9
MAX_PURE_PROFILES = 10**6


@dataclass(frozen=True)
class Verdict:
    """Boolean outcome of a test together with its worst observed value."""

    ok: bool
    worst: float

    def __bool__(self) -> bool:
        return self.ok


class NormalFormGame:
    def __init__(self, payoffs: Sequence, names: Sequence[str] | None = None):
        tensors = tuple(np.array(u, dtype=float) for u in payoffs)
        if not tensors:
            raise DomainError("a game needs at least one player")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise DomainError(
                f"{len(tensors)} players but payoff tensors have {len(shape)} axes")
        if any(u.shape != shape for u in tensors):
            raise DomainError("payoff tensors must share one shape")
        if any(m < 2 for m in shape):
            raise DomainError("every player needs at least two actions")
        for u in tensors:
            u.setflags(write=False)
        self.payoffs = tensors
        self.names = tuple(names) if names else None

    @property
    def players(self) -> int:
        return len(self.payoffs)

    @property
    def action_counts(self) -> tuple[int, ...]:
        return self.payoffs[0].shape

    def __repr__(self):
        return f"NormalFormGame(actions={self.action_counts})"

    def check_profile(self, x) -> list[np.ndarray]:
        if len(x) != self.players:
            raise DomainError(f"profile has {len(x)} blocks, game has {self.players} players")
        out = []
        for k, (xk, m) in enumerate(zip(x, self.action_counts)):
            xk = np.asarray(xk, dtype=float)
            if xk.shape != (m,):
                raise DomainError(f"player {k}: expected {m} components, got {xk.shape}")
            out.append(xk)
        return out

    def pure_profile(self, actions: Sequence[int]) -> list[np.ndarray]:
        return [np.eye(m)[a] for a, m in zip(actions, self.action_counts)]

    def uniform_profile(self) -> list[np.ndarray]:
        return [np.full(m, 1.0 / m) for m in self.action_counts]


def _contract_others(tensor: np.ndarray, x, keep: int) -> np.ndarray:
    # contract from the last axis down so earlier axis numbers stay valid
    T = tensor
    for ell in range(len(x) - 1, -1, -1):
        if ell != keep:
            T = np.tensordot(T, x[ell], axes=([ell], [0]))
    return T


def payoff_vector(game: NormalFormGame, x, k: int) -> np.ndarray:
    """Payoffs ``v_k(x)`` of player ``k``'s pure actions against ``x_{-k}``."""
    x = game.check_profile(x)
    return _contract_others(game.payoffs[k], x, k)


def payoff_vectors(game: NormalFormGame, x) -> list[np.ndarray]:
    x = game.check_profile(x)
    return [_contract_others(u, x, k) for k, u in enumerate(game.payoffs)]


def expected_payoff(game: NormalFormGame, x, k: int) -> float:
    x = game.check_profile(x)
    return float(payoff_vector(game, x, k) @ x[k])


def multilinear(tensor: np.ndarray, x) -> float:
    """Full multilinear sum ``sum_a T[a] prod_k x_k[a_k]``."""
    T = tensor
    for ell in range(len(x) - 1, -1, -1):
        T = np.tensordot(T, x[ell], axes=([ell], [0]))
    return float(T)


# ---------------------------------------------------------------------------
# potentials

@dataclass(frozen=True)
class PotentialCertificate:
    is_potential: bool
    max_residual: float
    potential_values: np.ndarray | None = None


def _cycle_residual(game: NormalFormGame) -> float:
    """Largest payoff-change sum around a closed two-player deviation 4-cycle."""
    worst = 0.0
    N = game.players
    for i, j in itertools.combinations(range(N), 2):
        Ui = np.moveaxis(game.payoffs[i], (i, j), (0, 1))
        Uj = np.moveaxis(game.payoffs[j], (i, j), (0, 1))
        # axes of R: (a_i, b_i, a_j, b_j, rest...)
        ai = Ui[:, None, :, None]
        bi_aj = Ui[None, :, :, None]
        ai_bj = Ui[:, None, None, :]
        bi_bj = Ui[None, :, None, :]
        ja = Uj[:, None, :, None]
        jb_a = Uj[None, :, :, None]
        ja_b = Uj[:, None, None, :]
        jb_b = Uj[None, :, None, :]
        R = (bi_aj - ai) + (jb_b - jb_a) + (ai_bj - bi_bj) + (ja - ja_b)
        worst = max(worst, float(np.max(np.abs(R))))
    return worst


def verify_potential(game: NormalFormGame, tol: float = 1e-9) -> PotentialCertificate:
    """Test for an exact potential and build one over pure profiles.

    The candidate is obtained by integrating unilateral payoff changes along the
    path that switches players one at a time from the all-zero profile; the
    residual is the worse of the 4-cycle test and the candidate's own mismatch
    against every unilateral deviation.
    """
    shape = game.action_counts
    N = game.players
    if N == 1:
        return PotentialCertificate(True, 0.0, np.array(game.payoffs[0]))
    phi = np.zeros(shape)
    for a in itertools.product(*(range(m) for m in shape)):
        total = 0.0
        for k in range(N):
            cur = a[: k + 1] + (0,) * (N - k - 1)
            prev = a[:k] + (0,) * (N - k)
            total += game.payoffs[k][cur] - game.payoffs[k][prev]
        phi[a] = total
    mismatch = 0.0
    for k in range(N):
        du = game.payoffs[k] - np.take(game.payoffs[k], [0], axis=k)
        dphi = phi - np.take(phi, [0], axis=k)
        mismatch = max(mismatch, float(np.max(np.abs(du - dphi))))
    residual = max(_cycle_residual(game), mismatch)
    ok = residual < tol
    return PotentialCertificate(ok, residual, phi if ok else None)


# ---------------------------------------------------------------------------
# equilibrium tests

def _supports(x, threshold):
    return [xk > threshold for xk in x]


def is_nash(game: NormalFormGame, x, tol: float = 1e-9,
            support_threshold: float = SUPPORT_THRESHOLD) -> Verdict:
    """Every supported action earns at least as much as every alternative."""
    x = game.check_profile(x)
    v = payoff_vectors(game, x)
    worst = np.inf
    for vk, sk in zip(v, _supports(x, support_threshold)):
        worst = min(worst, float(np.min(vk[sk]) - np.max(vk)))
    return Verdict(worst >= -tol, worst)


def is_restricted_equilibrium(game: NormalFormGame, x, tol: float = 1e-9,
                              support_threshold: float = SUPPORT_THRESHOLD) -> bool:
    """Supported actions of every player earn equal payoffs (within ``tol``)."""
    x = game.check_profile(x)
    v = payoff_vectors(game, x)
    for vk, sk in zip(v, _supports(x, support_threshold)):
        if np.ptp(vk[sk]) > tol:
            return False
    return True


def _pure_action(xk, tol=1e-12):
    a = int(np.argmax(xk))
    return a if abs(xk[a] - 1.0) <= tol else None


def is_strict_equilibrium(game: NormalFormGame, x, margin: float = 0.0) -> bool:
    x = game.check_profile(x)
    actions = [_pure_action(xk) for xk in x]
    if any(a is None for a in actions):
        return False
    v = payoff_vectors(game, x)
    for vk, a in zip(v, actions):
        others = np.delete(vk, a)
        if not np.all(vk[a] - others > margin):
            return False
    return True


def enumerate_pure_strict_equilibria(game: NormalFormGame) -> list[tuple[int, ...]]:
    shape = game.action_counts
    if int(np.prod(shape)) > MAX_PURE_PROFILES:
        raise DomainError(f"{int(np.prod(shape))} pure profiles exceeds {MAX_PURE_PROFILES}")
    strict = np.ones(shape, dtype=bool)
    for k, u in enumerate(game.payoffs):
        srt = np.sort(u, axis=k)
        top1 = np.take(srt, [-1], axis=k)
        top2 = np.take(srt, [-2], axis=k)
        best_other = np.where(u == top1, top2, top1)
        strict &= u - best_other > 0
    return [tuple(int(i) for i in idx) for idx in np.argwhere(strict)]


def restricted_equilibria(game: NormalFormGame, tol: float = 1e-9) -> list[list[np.ndarray]]:
    """Pure profiles plus, for two-player games, every fully mixed-on-support
    profile found by support enumeration (nondegenerate games)."""
    shape = game.action_counts
    found = [game.pure_profile(a) for a in itertools.product(*(range(m) for m in shape))]
    if game.players != 2:
        return found
    A, B = game.payoffs
    for s1 in _subsets(shape[0]):
        for s2 in _subsets(shape[1]):
            if len(s1) == 1 and len(s2) == 1:
                continue
            y = _indifference(A[np.ix_(s1, s2)])
            z = _indifference(B[np.ix_(s1, s2)].T)
            if y is None or z is None:
                continue
            x1 = np.zeros(shape[0]); x1[list(s1)] = z
            x2 = np.zeros(shape[1]); x2[list(s2)] = y
            if is_restricted_equilibrium(game, [x1, x2], tol):
                found.append([x1, x2])
    return found


def _subsets(m):
    for r in range(1, m + 1):
        yield from itertools.combinations(range(m), r)


def _indifference(M):
    """Mixed strategy over columns of ``M`` making every row earn the same."""
    rows, cols = M.shape
    lhs = np.vstack([np.hstack([M, -np.ones((rows, 1))]),
                     np.hstack([np.ones((1, cols)), np.zeros((1, 1))])])
    rhs = np.zeros(rows + 1); rhs[-1] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if rank < cols + 1 or not np.allclose(lhs @ sol, rhs, atol=1e-10):
        return None
    y = sol[:cols]
    if np.any(y <= 0):
        return None
    return y


# ---------------------------------------------------------------------------
# symmetric single-population games

class SymmetricGame:
    """Symmetric two-player game with payoff matrix ``U``: ``u(x, y) = x^T U y``."""

    def __init__(self, matrix):
        U = np.array(matrix, dtype=float)
        if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] < 2:
            raise DomainError("symmetric game needs a square matrix with >= 2 actions")
        U.setflags(write=False)
        self.matrix = U

    @property
    def actions(self) -> int:
        return self.matrix.shape[0]

    @property
    def symmetric(self) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.T, rtol=0.0, atol=1e-12))

    def __repr__(self):
        return f"SymmetricGame({self.matrix.tolist()})"

    def payoff_vector(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    def as_normal_form(self) -> NormalFormGame:
        return NormalFormGame([self.matrix, self.matrix.T])

    def symmetric_shift(self, tol: float = 1e-12) -> np.ndarray | None:
        """Symmetric ``U + 1 c^T`` if one exists, else ``None``.

        Adding ``c_b`` to column ``b`` shifts every action's payoff by the same
        amount ``c . x``, which leaves all the dynamics unchanged.
        """
        U = self.matrix
        D = U - U.T                      # need D[a, b] = c_a - c_b
        c = D[:, 0] - D[0, 0]
        if not np.allclose(c[:, None] - c[None, :], D, rtol=0.0, atol=tol):
            return None
        return U + c[None, :]


def ess_check(game: SymmetricGame, x_star, radius: float = 0.05, samples: int = 10_000,
              seed: int = 0, tol: float = 1e-9) -> Verdict:
    """Sampled local test of ``<v(x), x - x*> < 0`` around ``x*``.

    ``x*`` must first be a symmetric Nash state.  Points are drawn from a
    scrambled Halton sequence inside the Euclidean ball of ``radius``; a
    positive answer is evidence only, never a proof.
    """
    x_star = np.asarray(x_star, dtype=float)
    v_star = game.payoff_vector(x_star)
    supp = x_star > SUPPORT_THRESHOLD
    nash_gap = float(np.min(v_star[supp]) - np.max(v_star))
    if nash_gap < -tol:
        return Verdict(False, -nash_gap)
    d = x_star.size
    u = qmc.Halton(d=d + 1, scramble=True, seed=seed).random(samples)
    dirs = 2.0 * u[:, :d] - 1.0
    dirs -= dirs.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(dirs, axis=1)
    keep = norms > 1e-12
    dirs = dirs[keep] / norms[keep, None]
    r = radius * u[keep, d]
    pts = x_star + r[:, None] * dirs
    pts = pts[(np.min(pts, axis=1) >= 0.0) & (r > 1e-12)]
    if len(pts) == 0:
        return Verdict(False, np.nan)
    vals = np.einsum("ij,ij->i", pts @ game.matrix.T, pts - x_star)
    worst = float(np.max(vals))
    return Verdict(worst < 0.0, worst)


# ---------------------------------------------------------------------------
# named games and the game file format

def zero_game(n_actions: int) -> NormalFormGame:
    """Single player, ``n_actions`` actions, all payoffs zero."""
    return NormalFormGame([np.zeros(n_actions)])


def hawk_dove(value: float = 2.0, cost: float = 4.0) -> SymmetricGame:
    return SymmetricGame([[(value - cost) / 2.0, value], [0.0, value / 2.0]])


BUILTIN_GAMES = {
    "matching_pennies": lambda: NormalFormGame(
        [[[1, -1], [-1, 1]], [[-1, 1], [1, -1]]]),
    # actions (C, D)
    "prisoners_dilemma": lambda: NormalFormGame(
        [[[3, 0], [5, 1]], [[3, 5], [0, 1]]], names=("C", "D")),
    "coordination_2x2": lambda: NormalFormGame(
        [[[1, 0], [0, 1]], [[1, 0], [0, 1]]], names=("A", "B")),
    "hawk_dove": hawk_dove,
    "rps": lambda: SymmetricGame([[0, -1, 1], [1, 0, -1], [-1, 1, 0]]),
}

_ZERO_RE = re.compile(r"^zero(\d+)$")


def named_game(name: str):
    m = _ZERO_RE.match(name)
    if m:
        return zero_game(int(m.group(1)))
    try:
        return BUILTIN_GAMES[name]()
    except KeyError:
        raise KeyError(f"unknown game {name!r}") from None


def game_from_dict(data: dict):
    """Build a game from the JSON file schema.

    ``{"symmetric": true, "matrix": [[...]]}`` gives a :class:`SymmetricGame`;
    otherwise ``{"players": N, "actions": [...], "payoffs": {"1": ..., "N": ...}}``
    with 1-based player keys.
    """
    try:
        if data.get("symmetric"):
            return SymmetricGame(data["matrix"])
        N = int(data["players"])
        actions = tuple(int(a) for a in data["actions"])
        payoffs = data["payoffs"]
        tensors = []
        for k in range(1, N + 1):
            u = np.array(payoffs[str(k)], dtype=float)
            if u.shape != actions:
                raise ConfigError(f"player {k} payoffs have shape {u.shape}, expected {actions}")
            tensors.append(u)
        if len(actions) != N:
            raise ConfigError("length of 'actions' must equal 'players'")
        return NormalFormGame(tensors)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed game definition: {exc}") from exc


def game_to_dict(game) -> dict:
    if isinstance(game, SymmetricGame):
        return {"symmetric": True, "matrix": game.matrix.tolist()}
    return {
        "players": game.players,
        "actions": list(game.action_counts),
        "payoffs": {str(k + 1): u.tolist() for k, u in enumerate(game.payoffs)},
    }


def load_game(spec: str):
    """Resolve a built-in name or a path to a JSON game file."""
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read game file {spec}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("game file must hold a JSON object")
        return game_from_dict(data)
    try:
        return named_game(spec)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
