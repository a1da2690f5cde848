import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inertia import kernels as kg
from inertia.errors import BoundaryError, DomainError, MissingPrimitiveError, OffSurfaceError


def interior_point(rng, n):
    x = rng.dirichlet(np.ones(n))
    x = np.clip(x, 1e-3, None)
    return x / x.sum()


def tangent(rng, n):
    w = rng.standard_normal(n)
    return w - w.mean()


KERNELS = [kg.shahshahani(), kg.log_barrier(), kg.power(1.5), kg.power(3.0)]


@pytest.mark.parametrize("K", KERNELS, ids=lambda k: k.name)
def test_builtin_kernels_pass_validation(K):
    K.validate()


def test_validate_rejects_convex_third_derivative():
    bad = kg.Kernel("bad", theta=lambda x: x**2, d1=lambda x: 2 * x,
                    d2=lambda x: 2.0 + 0 * x, d3=lambda x: 0 * x)
    with pytest.raises(DomainError):
        bad.validate()


def test_kernel_eval_log_barrier():
    th, d1, d2, d3 = kg.kernel_eval(kg.log_barrier(), 0.5)
    assert th == pytest.approx(math.log(2))
    assert (d1, d2, d3) == pytest.approx((-2.0, 4.0, -16.0))
    with pytest.raises(DomainError):
        kg.kernel_eval(kg.log_barrier(), 0.0)


def test_get_kernel_registry():
    assert kg.get_kernel("Log-Barrier").name == "log-barrier"
    assert kg.get_kernel("power:2.5").name == "power:2.5"
    with pytest.raises(KeyError):
        kg.get_kernel("entropy")
    with pytest.raises(KeyError):
        kg.get_kernel("power:")


def test_harmonic_weight_shahshahani_is_one():
    x = np.array([0.2, 0.3, 0.5])
    assert kg.harmonic_weight(kg.shahshahani(), x) == pytest.approx(1.0)
    assert kg.harmonic_weight(kg.log_barrier(), x) == pytest.approx(1.0 / 0.38)


def test_metric_weights_refuse_boundary():
    with pytest.raises(BoundaryError):
        kg.metric_weights(kg.shahshahani(), [1.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_rank_one_inverse_matches_dense_inverse(n, seed):
    rng = np.random.default_rng(seed)
    q = np.exp(rng.uniform(-3, 3, n))
    A = np.diag(q[1:]) + q[0]
    dense = np.linalg.inv(A)
    fast = kg.invert_rank_one_plus_diag(q)
    assert np.max(np.abs(fast - dense)) < 1e-12 * max(1.0, np.max(np.abs(dense)))


def test_rank_one_inverse_rejects_nonpositive():
    with pytest.raises(DomainError):
        kg.invert_rank_one_plus_diag([1.0, 0.0, 2.0])


def christoffel_by_differences(K, x, h=1e-6):
    """Levi-Civita symbols from central differences of the reduced metric."""
    n = x.size - 1

    def g_at(y):
        return kg.reduced_metric(K, y)[0]

    dg = np.zeros((n, n, n))   # dg[l] = d g / d y_l
    for l in range(n):
        e = np.zeros_like(x)
        e[l + 1], e[0] = h, -h
        dg[l] = (g_at(x + e) - g_at(x - e)) / (2 * h)
    ginv = np.linalg.inv(g_at(x))
    G = np.zeros((n, n, n))
    for k in range(n):
        for m in range(n):
            for p in range(n):
                G[k, m, p] = 0.5 * sum(ginv[k, l] * (dg[m][l, p] + dg[p][l, m] - dg[l][m, p])
                                       for l in range(n))
    return G


@pytest.mark.parametrize("K", KERNELS, ids=lambda k: k.name)
def test_christoffel_matches_finite_differences(K):
    rng = np.random.default_rng(3)
    for n in (2, 3, 5):
        x = interior_point(rng, n)
        exact = kg.christoffel(K, x)
        approx = christoffel_by_differences(K, x)
        assert np.max(np.abs(exact - approx)) < 1e-6 * np.max(np.abs(exact))


def test_christoffel_shahshahani_two_actions():
    # one reduced coordinate; the symbol is (2y - 1) / (2 y (1 - y))
    G = kg.christoffel(kg.shahshahani(), np.array([0.75, 0.25]))
    assert G.shape == (1, 1, 1)
    assert G[0, 0, 0] == pytest.approx(-4.0 / 3.0)


def test_reduced_metric_inverse_consistent():
    g, ginv = kg.reduced_metric(kg.log_barrier(), np.array([0.1, 0.2, 0.3, 0.4]))
    assert np.allclose(g @ ginv, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("K", KERNELS, ids=lambda k: k.name)
def test_chart_is_an_isometry(K):
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = interior_point(rng, 4)
        w = tangent(rng, 4)
        _, xidot = kg.to_euclidean(K, x, w)
        assert abs(np.linalg.norm(xidot) - kg.riemannian_norm(K, x, w)) < 1e-10


@pytest.mark.parametrize("K", KERNELS, ids=lambda k: k.name)
def test_chart_derivative_is_root_weight(K):
    x = np.linspace(0.05, 0.95, 7)
    h = 1e-6
    slope = (K.chart.forward(x + h) - K.chart.forward(x - h)) / (2 * h)
    assert np.allclose(slope, np.sqrt(K.d2(x)), rtol=1e-7)


@pytest.mark.parametrize("K", KERNELS, ids=lambda k: k.name)
def test_euclidean_round_trip(K):
    x = np.array([0.1, 0.6, 0.3])
    w = np.array([0.2, -0.5, 0.3])
    xi, xid = kg.to_euclidean(K, x, w)
    x2, w2 = kg.from_euclidean(K, xi, xid)
    assert np.allclose(x2, x, atol=1e-13)
    assert np.allclose(w2, w, atol=1e-12)


def test_from_euclidean_rejects_off_surface():
    with pytest.raises(OffSurfaceError):
        kg.from_euclidean(kg.shahshahani(), np.array([1.0, 1.0]), np.zeros(2))


def test_numeric_chart_agrees_with_closed_form():
    K = kg.power(3.0)
    bare = kg.Kernel("p3", K.theta, K.d1, K.d2, K.d3)
    chart = kg.chart_of(bare)
    x = np.array([0.01, 0.2, 0.9])
    # both charts are primitives of sqrt(theta''); they differ by a constant
    diff = chart.forward(x) - K.chart.forward(x)
    assert np.ptp(diff) < 1e-9
    assert np.allclose(chart.inverse(chart.forward(x)), x, rtol=1e-10)
    with pytest.raises(MissingPrimitiveError):
        kg.chart_of(bare, quadrature=False)


def test_tangent_and_simplex_checks():
    with pytest.raises(DomainError):
        kg.as_tangent([1.0, 0.0])
    with pytest.raises(DomainError):
        kg.as_simplex_point([0.5, 0.6])
    assert kg.is_interior([0.5, 0.5]) and not kg.is_interior([1.0, 0.0])


@pytest.mark.parametrize("name,well", [
    ("shahshahani", False), ("log-barrier", True),
    ("power:1", False), ("power:1.5", False), ("power:2", True), ("power:3", True),
])
def test_wellposedness_dichotomy(name, well):
    assert kg.classify_wellposedness(kg.get_kernel(name)).well_posed is well


def test_numeric_classifier_without_flag():
    K = kg.shahshahani()
    bare = kg.Kernel("bare", K.theta, K.d1, K.d2, K.d3)
    c = kg.classify_wellposedness(bare)
    assert c.method == "numeric" and not c.well_posed
    assert c.limit == pytest.approx(2.0, rel=1e-4)


def test_partial_integrals_log_barrier_grow_like_log():
    I = kg.partial_integrals(kg.log_barrier(), (1e-2, 1e-4))
    assert I == pytest.approx([math.log(100), math.log(1e4)], rel=1e-10)
