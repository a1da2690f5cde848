"""Vector fields of the inertial dynamics and their first/second-order baselines.

State blocks are per player: ``x[k]`` is player k's mixed strategy and
``xdot[k]`` its (tangent) velocity.  The multi-player geometry is the product
metric, so every formula below acts block by block with the player's own
kernel.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import games
from .errors import BoundaryError, DomainError, NoPotentialError
from .kernels import INTERIOR_EPS, Kernel, as_tangent, require_interior, shahshahani


class FieldKind(enum.Enum):
    INERTIAL = "id"
    INERTIAL_EUCLIDEAN = "id-euclidean"
    REPLICATOR = "rd"
    SECOND_ORDER_REPLICATOR = "rd2"

    @property
    def second_order(self) -> bool:
        return self is not FieldKind.REPLICATOR

    @classmethod
    def parse(cls, name: str) -> "FieldKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise DomainError(f"unknown field kind {name!r}") from None


# ---------------------------------------------------------------------------
# payoff sources

class GameSource:
    """Payoffs from a normal-form game; each player ascends their own payoff."""

    def __init__(self, game: games.NormalFormGame):
        self.game = game
        self.sizes = tuple(game.action_counts)
        self._certificate = None

    def payoffs(self, x):
        return games.payoff_vectors(self.game, x)

    @property
    def certificate(self) -> games.PotentialCertificate:
        if self._certificate is None:
            self._certificate = games.verify_potential(self.game)
        return self._certificate

    def potential(self, x) -> float:
        cert = self.certificate
        if not cert.is_potential:
            raise NoPotentialError("game has no exact potential")
        return games.multilinear(cert.potential_values, x)


class PopulationSource:
    """Single-population play of a symmetric game: one simplex, ``v(x) = U x``.

    A potential ``x^T S x / 2`` exists when ``U`` is symmetric up to adding a
    constant to each column (``S`` is that symmetric representative).
    """

    def __init__(self, game: games.SymmetricGame):
        self.game = game
        self.sizes = (game.actions,)
        self._sym = game.symmetric_shift()

    def payoffs(self, x):
        return [self.game.payoff_vector(x[0])]

    def potential(self, x) -> float:
        if self._sym is None:
            raise NoPotentialError("payoff matrix is not symmetric up to column shifts")
        y = np.asarray(x[0], dtype=float)
        return 0.5 * float(y @ self._sym @ y)


@dataclass(frozen=True)
class ObjectiveSource:
    """Single agent maximising a smooth ``phi`` with gradient ``grad`` on one simplex."""

    phi: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    size: int

    @property
    def sizes(self):
        return (self.size,)

    def payoffs(self, x):
        return [np.asarray(self.grad(np.asarray(x[0], dtype=float)), dtype=float)]

    def potential(self, x) -> float:
        return float(self.phi(np.asarray(x[0], dtype=float)))


def quadratic_objective(center, weight: float = 1.0) -> ObjectiveSource:
    """``phi(x) = -weight * sum (x_a - c_a)**2``, maximised at ``c``."""
    c = np.asarray(center, dtype=float)
    return ObjectiveSource(
        phi=lambda x: -weight * float(np.sum((x - c) ** 2)),
        grad=lambda x: -2.0 * weight * (x - c),
        size=c.size,
    )


def as_source(obj):
    if isinstance(obj, games.NormalFormGame):
        return GameSource(obj)
    if isinstance(obj, games.SymmetricGame):
        return PopulationSource(obj)
    return obj


# ---------------------------------------------------------------------------
# spec and state types

@dataclass(frozen=True)
class DynamicsSpec:
    kind: FieldKind
    source: object
    kernels: tuple = ()
    friction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "source", as_source(self.source))
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", FieldKind.parse(self.kind))
        if not self.friction >= 0:
            raise DomainError("friction must be nonnegative")
        sizes = self.source.sizes
        kernels = tuple(self.kernels)
        if self.kind in (FieldKind.INERTIAL, FieldKind.INERTIAL_EUCLIDEAN):
            if len(kernels) == 1 and len(sizes) > 1:
                kernels = kernels * len(sizes)
            if len(kernels) != len(sizes):
                raise DomainError(f"need one kernel per player ({len(sizes)}), got {len(kernels)}")
            for K in {k.name: k for k in kernels}.values():
                K.validate()
        else:
            # replicator baselines live in the Shahshahani geometry
            kernels = (shahshahani(),) * len(sizes)
        if self.kind is FieldKind.INERTIAL_EUCLIDEAN and any(k.chart is None for k in kernels):
            raise DomainError("Euclidean field needs a closed-form chart for every kernel")
        object.__setattr__(self, "kernels", kernels)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(self.source.sizes)


@dataclass(frozen=True)
class PhasePoint:
    position: tuple
    velocity: tuple | None = None
    time: float = 0.0

    def __post_init__(self):
        pos = tuple(np.asarray(p, dtype=float) for p in self.position)
        for p in pos:
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise DomainError(f"position block is not a simplex point: {p}")
        object.__setattr__(self, "position", pos)
        if self.velocity is not None:
            vel = tuple(np.asarray(v, dtype=float) for v in self.velocity)
            if len(vel) != len(pos) or any(v.shape != p.shape for v, p in zip(vel, pos)):
                raise DomainError("velocity blocks must match position blocks")
            for v in vel:
                as_tangent(v, tol=1e-9)
            object.__setattr__(self, "velocity", vel)

    def speeds(self):
        return self.velocity if self.velocity is not None else tuple(
            np.zeros_like(p) for p in self.position)


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential_term: float | None
    total: float | None


# ---------------------------------------------------------------------------
# fields

def _interior_blocks(x):
    for xk in x:
        if not np.min(xk) > INTERIOR_EPS:
            raise BoundaryError(f"state too close to the boundary (min = {np.min(xk):.3e})")


def hr_gradient(kernel: Kernel, x, dvec) -> np.ndarray:
    """Riemannian gradient on the simplex of a function with ambient partials ``dvec``."""
    x = require_interior(x)
    d = np.asarray(dvec, dtype=float)
    inv_h = 1.0 / kernel.d2(x)
    H = 1.0 / np.sum(inv_h)
    return inv_h * (d - H * np.sum(inv_h * d))


def _inertial_block(kernel, x, xdot, v, eta):
    h = kernel.d2(x)
    t3 = kernel.d3(x)
    inv_h = 1.0 / h
    w = inv_h / np.sum(inv_h)           # Theta''/theta''_b, sums to one
    drive = inv_h * (v - w @ v)
    q = t3 * xdot**2
    inertia = 0.5 * inv_h * (q - w @ q)
    return drive - inertia - eta * xdot


def inertial_field_simplex(spec: DynamicsSpec, x, xdot) -> list[np.ndarray]:
    """Accelerations of the inertial dynamics in simplex coordinates."""
    _interior_blocks(x)
    v = spec.source.payoffs(x)
    return [_inertial_block(K, xk, vk_dot, vk, spec.friction)
            for K, xk, vk_dot, vk in zip(spec.kernels, x, xdot, v)]


def chart_positions(spec: DynamicsSpec, xi) -> list[np.ndarray]:
    """Simplex positions of Euclidean coordinates ``xi`` (no surface check)."""
    out = []
    for K, xik in zip(spec.kernels, xi):
        if np.min(xik) < K.chart.lower + _lower_guard(K):
            raise BoundaryError("Euclidean coordinates beyond the image of the simplex")
        out.append(K.chart.inverse(xik))
    return out


def _lower_guard(K: Kernel) -> float:
    # bounded charts refuse the same band as the simplex guard
    if np.isfinite(K.chart.lower):
        return float(K.chart.forward(INTERIOR_EPS) - K.chart.lower)
    return 0.0


def inertial_field_euclidean(spec: DynamicsSpec, xi, xidot, x=None) -> list[np.ndarray]:
    """Accelerations in Euclidean coordinates: projected drive plus contact force.

    Only ``1/sqrt(theta'')`` and ``theta'''/theta''**2`` enter, both finite as
    a coordinate tends to zero, so closed (unbounded) charts evaluate cleanly
    even where ``x`` has underflowed.
    """
    if x is None:
        x = chart_positions(spec, xi)
    v = spec.source.payoffs(x)
    out = []
    for K, xk, xidk, vk in zip(spec.kernels, x, xidot, v):
        s = K.scale(xk)
        s2 = s * s
        H = 1.0 / np.sum(s2)
        w = H * s2
        drive = s * (vk - w @ vk)
        contact = 0.5 * s * H * np.sum(K.contact_weight(xk) * xidk**2)
        out.append(drive + contact - spec.friction * xidk)
    return out


def replicator_field(source, x) -> list[np.ndarray]:
    """First-order replicator velocities ``x_a (v_a - x . v)``."""
    source = as_source(source)
    v = source.payoffs(x)
    return [xk * (vk - xk @ vk) for xk, vk in zip(x, v)]


def second_order_replicator_field(source, x, xdot) -> list[np.ndarray]:
    source = as_source(source)
    _interior_blocks(x)
    v = source.payoffs(x)
    out = []
    for xk, dk, vk in zip(x, xdot, v):
        vel = dk**2 / xk - xk * np.sum(dk**2 / xk)
        out.append(xk * (vk - xk @ vk) + vel)
    return out


def acceleration(spec: DynamicsSpec, x, xdot) -> list[np.ndarray]:
    """Second-order field of ``spec`` in simplex coordinates."""
    if spec.kind is FieldKind.SECOND_ORDER_REPLICATOR:
        return second_order_replicator_field(spec.source, x, xdot)
    if spec.kind is FieldKind.REPLICATOR:
        raise DomainError("the replicator field is first order")
    return inertial_field_simplex(spec, x, xdot)


# ---------------------------------------------------------------------------
# energy

def kinetic_energy(spec: DynamicsSpec, x, xdot) -> float:
    _interior_blocks(x)
    return 0.5 * sum(float(np.sum(K.d2(xk) * dk**2))
                     for K, xk, dk in zip(spec.kernels, x, xdot))


def energy(spec: DynamicsSpec, state: PhasePoint) -> EnergyReport:
    """Kinetic energy, potential and total ``E = K - Phi``.

    Raises :class:`NoPotentialError` when the source has no potential; use
    :func:`kinetic_energy` for a kinetic-only diagnostic.
    """
    K = kinetic_energy(spec, state.position, state.speeds())
    phi = spec.source.potential(list(state.position))
    return EnergyReport(K, phi, K - phi)


def has_potential(spec: DynamicsSpec) -> bool:
    src = spec.source
    if isinstance(src, GameSource):
        return src.certificate.is_potential
    if isinstance(src, PopulationSource):
        return src._sym is not None
    return hasattr(src, "potential")


def restricted_field_norm(spec: DynamicsSpec, x) -> float:
    """Largest acceleration component at ``(x, 0)`` with the field restricted to
    the face spanned by each player's support.

    This is how the inertial field extends to boundary points: coordinates
    outside the support stay at zero and the remaining ones evolve on the face.
    """
    v = spec.source.payoffs(x)
    worst = 0.0
    for K, xk, vk in zip(spec.kernels, x, v):
        supp = xk > games.SUPPORT_THRESHOLD
        if supp.sum() < 2:
            continue
        face = xk[supp]
        acc = _inertial_block(K, face, np.zeros_like(face), vk[supp], spec.friction)
        worst = max(worst, float(np.max(np.abs(acc))))
    return worst
