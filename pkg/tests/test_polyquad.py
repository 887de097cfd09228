import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyvem import polyquad as pq


UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

# a fixed non-convex hexagon (one reflex vertex)
HEXAGON = np.array([
    [0.0, 0.0], [1.2, -0.1], [1.5, 0.8], [0.7, 0.45], [0.4, 1.0], [-0.3, 0.6],
])


def test_monomial_ordering_prefix():
    e2 = pq.monomial_exponents(2)
    e4 = pq.monomial_exponents(4)
    assert np.array_equal(e4[: len(e2)], e2)
    assert len(e2) == 6
    for i, (a, b) in enumerate(e4):
        assert pq.monomial_index(a, b) == i


def test_quad_rule_constant_and_xy_unit_square():
    rule = pq.quad_rule(UNIT_SQUARE, 2)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-12)
    rule3 = pq.quad_rule(UNIT_SQUARE, 3)
    xy = rule3.points[:, 0] * rule3.points[:, 1]
    assert xy @ rule3.weights == pytest.approx(0.25, abs=1e-12)


def test_quad_rule_weights_positive_and_inside():
    for verts in (UNIT_SQUARE, HEXAGON):
        rule = pq.quad_rule(verts, 6)
        assert (rule.weights > 0).all()
        assert rule.weights.sum() == pytest.approx(pq.signed_area(verts), rel=1e-13)


def test_quad_rule_matches_refined_oracle_on_hexagon():
    # exactness on monomial products up to degree 6 against a 4x refined rule
    c, _ = pq.polygon_centroid(HEXAGON)
    h = np.max([np.linalg.norm(a - b) for a in HEXAGON for b in HEXAGON])
    basis = pq.ScaledMonomialBasis(3, c, h)
    rule = pq.quad_rule(HEXAGON, 6)
    oracle = pq.quad_rule(HEXAGON, 8, refine=2)
    V, Vo = basis.eval(rule.points), basis.eval(oracle.points)
    for i in range(basis.n):
        for j in range(basis.n):
            got = (V[:, i] * V[:, j]) @ rule.weights
            ref = (Vo[:, i] * Vo[:, j]) @ oracle.weights
            assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_gram_matrix_k0_is_area():
    c, a = pq.polygon_centroid(HEXAGON)
    basis = pq.ScaledMonomialBasis(0, c, 1.0)
    H = pq.gram_matrix(basis, pq.quad_rule(HEXAGON, 2))
    assert H.shape == (1, 1)
    assert H[0, 0] == pytest.approx(a, rel=1e-13)


def test_gram_matrix_unit_square_k1():
    # centered scaled basis on the unit square, h = diameter = sqrt(2)
    basis = pq.ScaledMonomialBasis(1, (0.5, 0.5), np.sqrt(2.0))
    H = pq.gram_matrix(basis, pq.quad_rule(UNIT_SQUARE, 2))
    exact = np.diag([1.0, 1.0 / 24.0, 1.0 / 24.0])
    assert np.allclose(H, exact, atol=1e-14)


def random_star_polygon(rng, n):
    """Simple polygon: full angular sweep around the origin, random radii."""
    gaps = rng.uniform(0.2, 1.0, n)
    ang = 2 * np.pi * np.cumsum(gaps) / gaps.sum()
    rad = rng.uniform(0.4, 1.0, n)
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def test_gram_spd_on_random_polygons():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = int(rng.integers(3, 8))
        verts = random_star_polygon(rng, n)
        c, _ = pq.polygon_centroid(verts)
        h = max(np.linalg.norm(a - b) for a in verts for b in verts)
        H = pq.gram_matrix(pq.ScaledMonomialBasis(2, c, h), pq.quad_rule(verts, 4))
        assert np.all(np.linalg.eigvalsh(H) > 0)


def test_gradient_of_constant_is_zero():
    calc = pq.poly_calculus(2, 0.7)
    assert np.allclose(calc.dx[:, 0], 0.0)
    assert np.allclose(calc.dy[:, 0], 0.0)


def test_divergence_of_xperp_is_zero():
    # the constant-q member xi^perp itself is divergence-free ...
    calc = pq.poly_calculus(2, 1.3)
    div_gperp = calc.divergence @ calc.gperp_cols
    assert np.allclose(div_gperp[:, 0], 0.0, atol=1e-14)
    # ... and rot is a nonsingular diagonal map on the whole gperp block
    assert np.all(np.abs(calc.rot_gperp) > 0)
    assert len(calc.rot_gperp) == pq.n_monomials(1)


def test_rot_on_g2perp_is_3x3_nonsingular():
    calc = pq.poly_calculus(2, 1.0)
    R = np.diag(calc.rot_gperp)
    assert R.shape == (3, 3)
    assert abs(np.linalg.det(R)) > 0


def test_decomposition_reconstructs_vector_polynomials():
    rng = np.random.default_rng(11)
    for k in (2, 3):
        calc = pq.poly_calculus(k, 0.9)
        nk2 = 2 * pq.n_monomials(k)
        assert calc.decomposition.shape == (nk2, nk2)
        p = rng.standard_normal(nk2)
        cg, cp = calc.split(p)
        rec = calc.grad_cols @ cg + calc.gperp_cols @ cp
        assert np.allclose(rec, p, atol=1e-12)
        assert calc.gperp_cols.shape[1] == k * (k + 1) // 2


def test_calculus_consistent_with_pointwise_derivatives():
    rng = np.random.default_rng(3)
    k, h, c = 3, 0.8, np.array([0.2, -0.1])
    basis = pq.ScaledMonomialBasis(k, c, h)
    down = pq.ScaledMonomialBasis(k - 1, c, h)
    calc = pq.poly_calculus(k, h)
    coeff = rng.standard_normal(basis.n)
    pts = rng.uniform(-0.5, 0.5, (20, 2)) + c
    grads = np.einsum("pnd,n->pd", basis.eval_grad(pts), coeff)
    dx_vals = down.eval(pts) @ (calc.dx @ coeff)
    dy_vals = down.eval(pts) @ (calc.dy @ coeff)
    assert np.allclose(grads[:, 0], dx_vals, atol=1e-12)
    assert np.allclose(grads[:, 1], dy_vals, atol=1e-12)


def test_edge_quadrature_x_squared():
    pts, w, _ = pq.edge_quadrature([0.0, 0.0], [1.0, 0.0], 4)
    assert (pts[:, 0] ** 2) @ w == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_edge_quadrature_length_scaling():
    pts, w, _ = pq.edge_quadrature([1.0, 1.0], [1.0, 3.0], 3)
    assert w.sum() == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_trace_matrix_reproduces_polynomials(k):
    t = pq.edge_node_params(k)
    assert len(t) == k + 1
    T = pq.boundary_trace_matrix(k)
    rng = np.random.default_rng(k)
    coeff = rng.standard_normal(k + 1)
    vals = t[:, None] ** np.arange(k + 1)[None, :] @ coeff
    assert np.allclose(T @ vals, coeff, atol=1e-13)


def test_trace_vandermonde_condition_k2():
    t = pq.edge_node_params(2)
    V = t[:, None] ** np.arange(3)[None, :]
    assert np.linalg.cond(V) < 100


def test_lagrange_values_partition_of_unity():
    t = pq.edge_node_params(3)
    at = np.linspace(0, 1, 7)
    L = pq.lagrange_values(t, at)
    assert np.allclose(L.sum(axis=1), 1.0, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=5),
       st.floats(min_value=0.1, max_value=10.0, allow_nan=False))
def test_monomial_count_and_unit_first_member(k, h):
    basis = pq.ScaledMonomialBasis(k, (0.0, 0.0), h)
    assert basis.n == (k + 1) * (k + 2) // 2
    vals = basis.eval(np.array([[0.3, -0.2]]))
    assert vals[0, 0] == 1.0


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=6))
def test_triangle_rule_integrates_area(d):
    pts, w = pq.triangle_rule(d)
    assert w.sum() == pytest.approx(0.5, abs=1e-13)
    assert (pts >= -1e-15).all()


def test_earclip_covers_nonconvex_polygon():
    # non-star-shaped (wrt centroid) L-shape forces the ear-clipping path
    L = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
    rule = pq.quad_rule(L, 2)
    assert rule.weights.sum() == pytest.approx(3.0, rel=1e-13)
    # integral of x over the L-shape: 2*1 strip (x in [0,2]) + 1x1 (x in [0,1])
    assert rule.points[:, 0] @ rule.weights == pytest.approx(2.0 + 0.5, rel=1e-13)
