"""Legendre kernels and the Hessian-Riemannian geometry they induce on the simplex.

A kernel ``theta`` on ``(0, inf)`` generates the diagonal metric
``g(x) = diag(theta''(x_0), ..., theta''(x_n))``.  Everything here is a pure
function of the kernel and the point; kernels are immutable and vectorised
over numpy arrays.

Reduced coordinates drop ``x_0`` and keep ``(x_1, ..., x_n)``; arrays indexed by
reduced coordinates therefore have length ``n`` with position ``mu - 1``
holding coordinate ``mu``.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import (
    BoundaryError,
    DomainError,
    InconclusiveError,
    MissingPrimitiveError,
    OffSurfaceError,
)

#: Geometry is only evaluated at points whose smallest coordinate exceeds this.
INTERIOR_EPS = 1e-14

#: Sample grid used by :meth:`Kernel.validate` (Legendre conditions are only
#: checked on these points, not for every x > 0).
VALIDATION_GRID = np.geomspace(1e-8, 1.0, 25)

#: Lower cut-offs for the partial integrals of sqrt(theta'') over [eps, 1].
WELLPOSED_EPSILONS = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12)

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EuclideanChart:
    """The isometric chart ``x_a -> xi_a = phi'(x_a)`` with ``phi'' = sqrt(theta'')``.

    ``lower`` is ``lim_{x -> 0+} phi'(x)``: finite when the image of the simplex
    is bounded, ``-inf`` when it is a closed hypersurface.
    """

    forward: Fn
    inverse: Fn
    lower: float


@dataclass(frozen=True)
class Kernel:
    name: str
    theta: Fn
    d1: Fn
    d2: Fn
    d3: Fn
    chart: EuclideanChart | None = None
    analytic_wellposed: bool | None = None
    # Optional closed forms that stay finite as x -> 0; used by the Euclidean
    # field, where x may underflow while xi is perfectly representable.
    root_inverse_d2: Fn | None = field(default=None, repr=False)
    d3_over_d2_squared: Fn | None = field(default=None, repr=False)

    def scale(self, x):
        """``1 / sqrt(theta''(x))``."""
        if self.root_inverse_d2 is not None:
            return self.root_inverse_d2(x)
        return 1.0 / np.sqrt(self.d2(x))

    def contact_weight(self, x):
        """``theta'''(x) / theta''(x)**2``."""
        if self.d3_over_d2_squared is not None:
            return self.d3_over_d2_squared(x)
        return self.d3(x) / self.d2(x) ** 2

    def validate(self) -> None:
        """Check the Legendre conditions on :data:`VALIDATION_GRID`.

        This is a sampled check; it cannot certify the conditions for all x.
        Raises :class:`DomainError` on the first violation.
        """
        x = VALIDATION_GRID
        with np.errstate(all="ignore"):
            d1, d2, d3 = self.d1(x), self.d2(x), self.d3(x)
        if not np.all(np.isfinite(self.theta(x))):
            raise DomainError(f"{self.name}: theta is not finite on the sample grid")
        if not np.all(d2 > 0):
            raise DomainError(f"{self.name}: theta'' must be positive")
        if not np.all(d3 < 0):
            raise DomainError(f"{self.name}: theta''' must be negative")
        if not np.all(np.diff(d1) > 0):
            raise DomainError(f"{self.name}: theta' must increase on the sample grid")
        # theta' -> -inf at 0: the drop over each four decades must not fade away
        lo, mid, hi = self.d1(np.array([1e-8, 1e-4, 1.0]))
        if not (mid - lo) >= 0.5 * (hi - mid):
            raise DomainError(f"{self.name}: theta' appears bounded below near 0")
        if self.chart is not None:
            xs = x[x > 1e-6]
            h = 1e-6 * xs
            slope = (self.chart.forward(xs + h) - self.chart.forward(xs - h)) / (2 * h)
            target = np.sqrt(self.d2(xs))
            if not np.allclose(slope, target, rtol=1e-6, atol=0.0):
                raise DomainError(f"{self.name}: chart derivative differs from sqrt(theta'')")


# ---------------------------------------------------------------------------
# built-in kernels

def _clip0(a):
    return np.maximum(a, 0.0)


def shahshahani() -> Kernel:
    return Kernel(
        name="shahshahani",
        theta=lambda x: x * np.log(x),
        d1=lambda x: np.log(x) + 1.0,
        d2=lambda x: 1.0 / x,
        d3=lambda x: -1.0 / x**2,
        chart=EuclideanChart(
            forward=lambda x: 2.0 * np.sqrt(x),
            inverse=lambda xi: _clip0(xi) ** 2 / 4.0,
            lower=0.0,
        ),
        analytic_wellposed=False,
        root_inverse_d2=lambda x: np.sqrt(x),
        d3_over_d2_squared=lambda x: -np.ones_like(np.asarray(x, dtype=float)),
    )


def log_barrier() -> Kernel:
    return Kernel(
        name="log-barrier",
        theta=lambda x: -np.log(x),
        d1=lambda x: -1.0 / x,
        d2=lambda x: 1.0 / x**2,
        d3=lambda x: -2.0 / x**3,
        chart=EuclideanChart(forward=np.log, inverse=np.exp, lower=-math.inf),
        analytic_wellposed=True,
        root_inverse_d2=lambda x: np.asarray(x, dtype=float) * 1.0,
        d3_over_d2_squared=lambda x: -2.0 * np.asarray(x, dtype=float),
    )


def power(p: float) -> Kernel:
    """Kernel with ``theta''(x) = x**-p``.

    Legendre only for ``p >= 1`` (``theta'`` is bounded below otherwise).  No
    analytic well-posedness flag is attached, so the classifier integrates.
    """
    p = float(p)
    if p <= 0:
        raise DomainError("power kernel needs p > 0")
    if p == 1.0:
        theta = lambda x: x * np.log(x) - x
        d1 = np.log
    elif p == 2.0:
        theta = lambda x: -np.log(x)
        d1 = lambda x: -1.0 / x
    else:
        theta = lambda x: x ** (2.0 - p) / ((1.0 - p) * (2.0 - p))
        d1 = lambda x: x ** (1.0 - p) / (1.0 - p)
    if p == 2.0:
        chart = EuclideanChart(forward=np.log, inverse=np.exp, lower=-math.inf)
    else:
        c = 1.0 - p / 2.0
        chart = EuclideanChart(
            forward=lambda x: x**c / c,
            inverse=lambda xi: _clip0(c * xi) ** (1.0 / c),
            lower=0.0 if c > 0 else -math.inf,
        )
    return Kernel(
        name=f"power:{p:g}",
        theta=theta,
        d1=d1,
        d2=lambda x: x ** (-p),
        d3=lambda x: -p * x ** (-p - 1.0),
        chart=chart,
        root_inverse_d2=lambda x: np.asarray(x, dtype=float) ** (p / 2.0),
        d3_over_d2_squared=lambda x: -p * np.asarray(x, dtype=float) ** (p - 1.0),
    )


_POWER_RE = re.compile(r"^power:([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)$")


def get_kernel(name: str) -> Kernel:
    """Look up a kernel by registry name.

    Accepts ``"shahshahani"``, ``"log-barrier"`` and ``"power:<p>"``.
    """
    key = name.strip().lower()
    if key == "shahshahani":
        return shahshahani()
    if key in ("log-barrier", "logbarrier", "log_barrier"):
        return log_barrier()
    m = _POWER_RE.match(key)
    if m:
        return power(float(m.group(1)))
    raise KeyError(f"unknown kernel {name!r}")


# ---------------------------------------------------------------------------
# points and vectors

def as_simplex_point(x, tol: float = 1e-12) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError("a simplex point needs at least two coordinates")
    if np.any(x < 0) or abs(x.sum() - 1.0) > tol:
        raise DomainError(f"not a point of the simplex: {x}")
    return x


def is_interior(x, eps: float = INTERIOR_EPS) -> bool:
    return bool(np.min(x) > eps)


def require_interior(x, eps: float = INTERIOR_EPS) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.min(x) > eps:
        raise BoundaryError(f"point too close to the boundary: min = {np.min(x):.3e}")
    return x


def as_tangent(w, tol: float = 1e-12) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if abs(w.sum()) > tol * max(1.0, float(np.max(np.abs(w), initial=0.0))):
        raise DomainError(f"not tangent to the simplex (sum = {w.sum():.3e})")
    return w


# ---------------------------------------------------------------------------
# operations

def kernel_eval(kernel: Kernel, x: float):
    """Return ``(theta, theta', theta'', theta''')`` at ``x > 0``."""
    if not x > 0:
        raise DomainError("kernel evaluated at a nonpositive point")
    return (float(kernel.theta(x)), float(kernel.d1(x)),
            float(kernel.d2(x)), float(kernel.d3(x)))


def metric_weights(kernel: Kernel, x) -> np.ndarray:
    return kernel.d2(require_interior(x))


def harmonic_weight(kernel: Kernel, x) -> float:
    """Harmonic aggregate ``(sum_b 1/theta''_b)**-1`` of the metric weights."""
    return 1.0 / float(np.sum(1.0 / metric_weights(kernel, x)))


def invert_rank_one_plus_diag(q) -> np.ndarray:
    """Inverse of ``A[mu, nu] = q[mu] delta + q[0]`` for ``mu, nu = 1..n``.

    ``q`` has length ``n + 1``; the result is ``n x n``.
    """
    q = np.asarray(q, dtype=float)
    if np.any(~(q > 0)):
        raise DomainError("rank-one update inverse needs positive weights")
    Q = 1.0 / np.sum(1.0 / q)
    r = 1.0 / q[1:]
    return np.diag(r) - Q * np.outer(r, r)


def reduced_metric(kernel: Kernel, x):
    """Metric in reduced coordinates and its inverse, as ``(g, g_inv)``."""
    h = metric_weights(kernel, x)
    g = np.diag(h[1:]) + h[0]
    return g, invert_rank_one_plus_diag(h)


def christoffel(kernel: Kernel, x) -> np.ndarray:
    """Christoffel symbols ``G[k, m, n]`` of the metric in reduced coordinates.

    Closed form: ``1/2 [delta_kmn t_k - H t_m / h_k delta_mn - H t_0 / h_k]``
    with ``h = theta''``, ``t = theta''' / theta''`` and ``H`` the harmonic weight.
    """
    x = require_interior(x)
    h = kernel.d2(x)
    t = kernel.d3(x) / h
    H = 1.0 / np.sum(1.0 / h)
    n = x.size - 1
    inv_h = 1.0 / h[1:]
    G = np.zeros((n, n, n))
    idx = np.arange(n)
    G[idx, idx, idx] += t[1:]
    # -H t_m / h_k on the (m, m) diagonal of every slice k
    G[:, idx, idx] -= H * np.outer(inv_h, t[1:])
    G -= (H * t[0] * inv_h)[:, None, None]
    return 0.5 * G


def riemannian_inner(kernel: Kernel, x, w, z) -> float:
    h = metric_weights(kernel, x)
    return float(np.sum(h * as_tangent(w) * as_tangent(z)))


def riemannian_norm(kernel: Kernel, x, w) -> float:
    return math.sqrt(riemannian_inner(kernel, x, w, w))


# ---------------------------------------------------------------------------
# Euclidean coordinates

def numeric_chart(kernel: Kernel) -> EuclideanChart:
    """Chart built by quadrature of ``sqrt(theta'')``, normalised so ``phi'(1) = 0``.

    The inverse brackets on ``(1e-300, 1)`` and refines with Newton steps;
    ``phi'`` is strictly increasing so the root is unique.
    """

    def root_d2(s):
        return math.sqrt(float(kernel.d2(s)))

    def fwd_scalar(x):
        if x <= 0:
            raise BoundaryError("chart evaluated at a nonpositive point")
        # integrate in log-space so the singularity at 0 is harmless
        val, _ = integrate.quad(lambda u: root_d2(math.exp(u)) * math.exp(u),
                                0.0, math.log(x), epsabs=0.0, epsrel=1e-13, limit=200)
        return val

    def forward(x):
        x = np.asarray(x, dtype=float)
        return np.vectorize(fwd_scalar, otypes=[float])(x)

    lower = -math.inf
    try:
        if not classify_wellposedness(kernel).well_posed:
            lower = fwd_scalar(1e-300)
    except InconclusiveError:
        pass

    def inv_scalar(xi):
        if xi <= lower:
            return 0.0
        if xi >= 0.0:
            return 1.0 if xi == 0.0 else math.nan
        # bracket downward from 1/2 so steep kernels never see tiny x unless needed
        lo, hi = 0.5, 1.0
        while fwd_scalar(lo) > xi:
            hi = lo
            if lo <= 1e-300:
                return 0.0
            lo = max(lo * 1e-3, 1e-300)
        x = math.sqrt(lo * hi)
        for _ in range(200):
            f = fwd_scalar(x) - xi
            if f > 0:
                hi = x
            else:
                lo = x
            step = f / root_d2(x)
            if abs(step) <= 1e-15 * x:
                return x - step
            cand = x - step
            x = cand if lo < cand < hi else math.sqrt(lo * hi)
        return x

    def inverse(xi):
        xi = np.asarray(xi, dtype=float)
        return np.vectorize(inv_scalar, otypes=[float])(xi)

    return EuclideanChart(forward=forward, inverse=inverse, lower=lower)


def chart_of(kernel: Kernel, quadrature: bool = True) -> EuclideanChart:
    if kernel.chart is not None:
        return kernel.chart
    if not quadrature:
        raise MissingPrimitiveError(f"{kernel.name} has no closed-form Euclidean chart")
    return numeric_chart(kernel)


def to_euclidean(kernel: Kernel, x, xdot, quadrature: bool = True):
    """Map ``(x, xdot)`` to ``(xi, xidot)`` with ``xi = phi'(x)``, ``xidot = sqrt(theta'') xdot``."""
    x = require_interior(x)
    xdot = as_tangent(xdot)
    chart = chart_of(kernel, quadrature)
    return chart.forward(x), np.sqrt(kernel.d2(x)) * xdot


def from_euclidean(kernel: Kernel, xi, xidot, tol: float = 1e-8, quadrature: bool = True):
    """Inverse of :func:`to_euclidean`; rejects points off the image surface."""
    chart = chart_of(kernel, quadrature)
    xi = np.asarray(xi, dtype=float)
    x = chart.inverse(xi)
    residual = abs(float(np.sum(x)) - 1.0)
    if not residual <= tol:
        raise OffSurfaceError(f"simplex constraint residual {residual:.3e} exceeds {tol:g}")
    return x, kernel.scale(x) * np.asarray(xidot, dtype=float)


# ---------------------------------------------------------------------------
# well-posedness

class Posedness(enum.Enum):
    WELL_POSED = "WellPosed"
    ILL_POSED = "IllPosed"


@dataclass(frozen=True)
class Classification:
    verdict: Posedness
    method: str
    epsilons: tuple = ()
    partial_integrals: tuple = ()
    limit: float | None = None

    @property
    def well_posed(self) -> bool:
        return self.verdict is Posedness.WELL_POSED


def partial_integrals(kernel: Kernel, epsilons=WELLPOSED_EPSILONS) -> np.ndarray:
    """``int_eps^1 sqrt(theta''(x)) dx`` for each cut-off, by adaptive Gauss-Kronrod."""

    def integrand(u):
        x = math.exp(u)
        return math.sqrt(float(kernel.d2(x))) * x

    out, total, upper = [], 0.0, 0.0
    for eps in epsilons:
        piece, _ = integrate.quad(integrand, math.log(eps), upper,
                                  epsabs=0.0, epsrel=1e-12, limit=200)
        total += piece
        upper = math.log(eps)
        out.append(total)
    return np.array(out)


def classify_wellposedness(kernel: Kernel, epsilons=WELLPOSED_EPSILONS) -> Classification:
    """Decide whether ``int_0^1 sqrt(theta'') dx`` diverges (well-posed dynamics).

    The analytic flag wins when present.  Otherwise the partial integrals are
    declared convergent when the last increment is below 1e-6 of the running
    value, or when the increments shrink geometrically (ratio < 0.999, the
    signature of an integrable power-law singularity); divergent when the
    increments never shrink.
    """
    if kernel.analytic_wellposed is not None:
        verdict = Posedness.WELL_POSED if kernel.analytic_wellposed else Posedness.ILL_POSED
        return Classification(verdict, "analytic")
    eps = tuple(epsilons)
    I = partial_integrals(kernel, eps)
    inc = np.diff(I)
    base = dict(epsilons=eps, partial_integrals=tuple(float(v) for v in I))
    if inc[-1] < 1e-6 * I[-1]:
        return Classification(Posedness.ILL_POSED, "numeric", limit=float(I[-1]), **base)
    ratios = inc[1:] / inc[:-1]
    if np.all(ratios >= 1.0 - 1e-9):
        return Classification(Posedness.WELL_POSED, "numeric", **base)
    if np.all(ratios < 0.999) and ratios[-1] <= ratios[0] * (1.0 + 1e-6):
        r = ratios[-1]
        limit = float(I[-1] + inc[-1] * r / (1.0 - r))
        return Classification(Posedness.ILL_POSED, "numeric", limit=limit, **base)
    raise InconclusiveError(
        f"{kernel.name}: partial integrals {I.tolist()} neither settle nor keep growing")
