import numpy as np
import pytest

from hypernorden import catalog
from hypernorden.errors import DegenerateInducedMetric, DomainError, RankDeficientImmersion
from hypernorden.hypercomplex import ClassVerdict, class_residuals
from hypernorden.manifold import christoffel, nabla_J, point_geometry
from hypernorden.policy import DEFAULT, halton_points
from hypernorden.submanifold import (
    IDENTITY_NAMES,
    Immersion,
    Umbilicity,
    frame_at,
    gauss_split,
    holomorphy_residual,
    lee_restriction_check,
    mean_curvature,
    normal_derivative,
    projected_normal_field,
    second_fundamental,
    second_fundamental_tensor,
    shape_data,
    shape_operator,
    holomorphic_identity_residuals,
    umbilicity_classify,
)

from oracles import fd_gradient, relative_error

# m = 1 slice of n = 2: tangent coordinates x1, x3, x5, x7; normal x2, x4, x6, x8
TANGENT_U = "x1 + sin(x3)"
NORMAL_U = "x6"
MIXED_U = "x1 + x6"


def reparametrized_slice(ambient, section=0.25):
    """The m=1 coordinate slice through a nonlinear change of source coordinates."""
    s1 = "(x1 + 0.3 * x2 * x2)"
    s2 = "(x2 - 0.2 * sin(x4))"
    s3 = "(x3 + x1 * x4 / 4)"
    s4 = "x4"
    c = repr(section)
    texts = [s1, c, s2, c, s3, c, s4, c]
    return Immersion.from_text(ambient, 1, texts, "reparametrized slice")


def slice_of(u, section=0.3):
    return catalog.coordinate_immersion(1, 2, catalog.conformal_W(2, u), section)


@pytest.fixture(scope="module")
def src_points():
    return halton_points(4, 6)


class TestFrame:
    def test_coordinate_slice(self, flat2):
        f = frame_at(catalog.coordinate_immersion(1, 2, flat2), np.zeros(4))
        assert np.array_equal(f.T, np.eye(8)[:, [0, 2, 4, 6]])
        assert np.allclose(f.T.T @ f.g @ f.Nbasis, 0.0)
        assert np.allclose(f.Nbasis[[0, 2, 4, 6]], 0.0)
        assert f.Nbasis.shape == (8, 4)

    def test_rank_deficient(self, flat2):
        imm = Immersion.from_text(flat2, 1, ["x1", "0", "x1", "0", "x3", "0", "x4", "0"])
        with pytest.raises(RankDeficientImmersion):
            frame_at(imm, np.zeros(4))

    def test_three_dimensional_slice_is_rank_deficient(self, flat2):
        imm = Immersion.from_text(flat2, 1, ["x1", "0", "x2", "0", "x3", "0", "0", "0"])
        with pytest.raises(RankDeficientImmersion):
            frame_at(imm, np.zeros(4))

    def test_wrong_component_count(self, flat2):
        with pytest.raises(DomainError):
            Immersion.from_text(flat2, 1, ["x1", "x2", "x3"])

    def test_null_plane_rejected(self, flat2):
        # ∂x1+∂u1 and ∂y1+∂v1 are null and orthogonal: the induced metric degenerates
        imm = Immersion.from_text(flat2, 1, ["x1", "x3", "x2", "0", "x1", "x4", "x2", "0"])
        with pytest.raises(DegenerateInducedMetric):
            frame_at(imm, np.zeros(4))

    def test_decomposition_is_complementary(self):
        imm = reparametrized_slice(catalog.conformal_W(2, MIXED_U))
        f = frame_at(imm, np.array([0.1, -0.2, 0.3, 0.4]))
        V = np.arange(8.0) - 3
        assert np.allclose(f.tangential(V) + f.normal(V), V)
        assert np.max(np.abs(f.T.T @ f.g @ f.normal(V))) < 1e-12


class TestHolomorphy:
    def test_coordinate_slice(self, flat2, src_points):
        imm = catalog.coordinate_immersion(1, 2, flat2)
        assert max(holomorphy_residual(imm, s) for s in src_points) < 1e-12

    @pytest.mark.parametrize(
        "texts",
        [
            ["x1", "0", "x2", "0", "x3", "x4", "0", "0"],  # span{∂x1, ∂y1, ∂u1, ∂u2}
            ["x1", "0", "x2", "0", "0", "x3", "0", "x4"],  # span{∂x1, ∂y1, ∂u2, ∂v2}
        ],
    )
    def test_non_quaternionic_planes(self, flat2, texts):
        imm = Immersion.from_text(flat2, 1, texts)
        assert holomorphy_residual(imm, np.zeros(4)) > 0.1

    def test_non_neutral_plane_has_no_frame(self, flat2):
        # span{∂x1, ∂y1, ∂x2, ∂u1} carries inertia (1, 3, 0)
        imm = Immersion.from_text(flat2, 1, ["x1", "x3", "x2", "0", "x4", "0", "0", "0"])
        with pytest.raises(DegenerateInducedMetric):
            frame_at(imm, np.zeros(4))

    def test_reparametrization_keeps_holomorphy(self, flat2, src_points):
        imm = reparametrized_slice(flat2)
        assert max(holomorphy_residual(imm, s) for s in src_points) < 1e-12


class TestSecondFundamentalForm:
    def test_flat_slice_vanishes(self, flat2, src_points):
        imm = catalog.coordinate_immersion(1, 2, flat2)
        assert all(np.max(np.abs(second_fundamental_tensor(imm, s))) < 1e-12 for s in src_points)

    def test_symmetry_random_pairs(self, src_points):
        imm = reparametrized_slice(catalog.conformal_W(2, MIXED_U))
        rng = np.random.default_rng(0)
        for s in halton_points(4, 32):
            for X, Y in rng.normal(size=(10, 2, 4)):
                assert np.max(np.abs(second_fundamental(imm, s, X, Y) - second_fundamental(imm, s, Y, X))) < 1e-10

    def test_umbilical_for_normal_factor(self, src_points):
        imm = slice_of(NORMAL_U)
        for s in src_points:
            sd = shape_data(imm, s)
            assert np.max(np.abs(sd.h - np.einsum("ij,a->aij", sd.frame.g_ind, sd.C))) < 1e-8

    def test_gauss_split_matches_induced_connection(self, src_points):
        imm = reparametrized_slice(catalog.conformal_W(2, "x1 * x2 + x6"))
        for s in src_points:
            coeffs, _ = gauss_split(frame_at(imm, s))
            induced = point_geometry(imm.induced, s).Gamma
            assert relative_error(coeffs, induced) < 1e-8

    def test_induced_metric_derivative_against_finite_differences(self):
        imm = reparametrized_slice(catalog.conformal_W(2, "x1 * x2 + x6"))
        s = np.array([0.2, -0.1, 0.4, 0.3])
        pullback = lambda t: (lambda f: f.T.T @ f.g @ f.T)(frame_at(imm, t))
        dG = np.moveaxis(fd_gradient(pullback, s), -1, 0)
        assert relative_error(point_geometry(imm.induced, s).dg, dG) < 1e-5
        assert relative_error(christoffel(np.linalg.inv(pullback(s)), dG), point_geometry(imm.induced, s).Gamma) < 1e-5


class TestShapeOperator:
    def test_flat_vanishes(self, flat2):
        imm = catalog.coordinate_immersion(1, 2, flat2)
        f = frame_at(imm, np.zeros(4))
        for N in f.Nbasis.T:
            for X in np.eye(4):
                assert np.all(shape_operator(imm, np.zeros(4), N, X) == 0.0)

    def test_rejects_tangent_vector(self, flat2):
        imm = catalog.coordinate_immersion(1, 2, flat2)
        with pytest.raises(DomainError):
            shape_operator(imm, np.zeros(4), np.eye(8)[0], np.eye(4)[0])

    def test_duality_with_h(self, src_points):
        imm = reparametrized_slice(catalog.conformal_W(2, MIXED_U))
        for s in src_points:
            f = frame_at(imm, s)
            for N in f.Nbasis.T:
                for i in range(4):
                    for j in range(4):
                        X, Y = np.eye(4)[i], np.eye(4)[j]
                        lhs = f.inner(shape_operator(imm, s, N, X), f.push(Y))
                        rhs = f.inner(second_fundamental(imm, s, X, Y), N)
                        assert abs(lhs - rhs) < 1e-9 * (1 + abs(rhs))

    def test_normal_derivative_agrees_with_shape_operator(self, src_points):
        imm = reparametrized_slice(catalog.conformal_W(2, MIXED_U))
        V = np.array([0.0, 1.0, 0.0, -2.0, 0.0, 0.5, 0.0, 1.0])
        field = projected_normal_field(imm, V)
        for s in src_points[:3]:
            N = frame_at(imm, s).normal(V)
            for X in np.eye(4):
                A, D = normal_derivative(imm, s, field, X)
                assert relative_error(A, shape_operator(imm, s, N, X)) < 1e-9
                assert np.max(np.abs(frame_at(imm, s).tangential(D))) < 1e-9

    def test_flat_constant_normal_field(self, flat2):
        imm = catalog.coordinate_immersion(1, 2, flat2)
        field = projected_normal_field(imm, np.eye(8)[1])
        for X in np.eye(4):
            A, D = normal_derivative(imm, np.zeros(4), field, X)
            assert np.all(A == 0.0) and np.all(D == 0.0)


class TestMeanCurvature:
    def test_flat_zero(self, flat2):
        assert np.all(mean_curvature(catalog.coordinate_immersion(1, 2, flat2), np.zeros(4)) == 0.0)

    @pytest.mark.parametrize("u", [NORMAL_U, MIXED_U, TANGENT_U])
    def test_lee_vector_formula(self, u, src_points):
        imm = slice_of(u)
        n = 2
        for s in src_points:
            sd = shape_data(imm, s)
            J = sd.frame.pg.J
            assert relative_error(sd.C, J[0] @ sd.p_bot[0] / (2 * (2 * n - 1))) < 1e-7
            for a in (1, 2):
                assert relative_error(sd.C, J[a] @ sd.p_bot[a] / (4 * n)) < 1e-7

    def test_trace_in_congruent_frame(self, src_points):
        imm = reparametrized_slice(catalog.conformal_W(2, MIXED_U))
        rng = np.random.default_rng(4)
        for s in src_points:
            f = frame_at(imm, s)
            h = second_fundamental_tensor(imm, s)
            P = rng.normal(size=(4, 4)) + 3 * np.eye(4)
            G2 = P.T @ f.g_ind @ P
            h2 = np.einsum("aij,ik,jl->akl", h, P, P)
            C2 = np.einsum("kl,akl->a", np.linalg.inv(G2), h2) / 4
            assert relative_error(C2, mean_curvature(imm, s)) < 1e-9


class TestLeeVectorSplit:
    def test_parts(self, src_points):
        imm = reparametrized_slice(catalog.conformal_W(2, MIXED_U))
        for s in src_points:
            sd = shape_data(imm, s)
            f = sd.frame
            # p_bot is defined as p - p_top, so the sum is exact up to one rounding
            assert np.max(np.abs(sd.p_top + sd.p_bot - sd.p)) <= 4e-16 * np.max(np.abs(sd.p))
            assert np.max(np.abs(sd.p_top @ f.g @ f.Nbasis)) < 1e-10
            assert np.max(np.abs(sd.p_bot @ f.g @ f.T)) < 1e-10


class TestIdentities:
    @pytest.mark.parametrize("u", [NORMAL_U, TANGENT_U, MIXED_U, "log(2 + cos(x4 + x5)) - x8 * x3"])
    def test_conformal_ambient(self, u, src_points):
        imm = slice_of(u)
        for s in src_points[:4]:
            r = holomorphic_identity_residuals(imm, s)
            assert r.ambient_is_W and r.ambient_verdict is ClassVerdict.W
            assert r.max() < 1e-7, r.residuals

    def test_reparametrized(self):
        imm = reparametrized_slice(catalog.conformal_W(2, "x1 * x6 + sin(x3)"))
        r = holomorphic_identity_residuals(imm, np.array([0.15, -0.3, 0.2, 0.45]))
        assert set(r.residuals) == set(IDENTITY_NAMES)
        assert r.max() < 1e-7

    def test_flat_ambient_all_vanish(self, flat2, src_points):
        imm = catalog.coordinate_immersion(1, 2, flat2)
        for s in src_points[:3]:
            r = holomorphic_identity_residuals(imm, s)
            assert r.max() < 1e-10 and r.ambient_verdict is ClassVerdict.K

    def test_induced_nabla_J_against_finite_differences(self):
        imm = slice_of(TANGENT_U)
        s = np.array([0.3, -0.4, 0.2, 0.1])
        d = 1e-6

        def induced_J(t):
            f = frame_at(imm, t)
            return np.linalg.solve(f.g_ind, f.T.T @ f.g @ f.pg.J[0] @ f.T)

        pullback = lambda t: (lambda f: f.T.T @ f.g @ f.T)(frame_at(imm, t))
        G = pullback(s)
        Gamma = christoffel(np.linalg.inv(G), np.moveaxis(fd_gradient(pullback, s, d), -1, 0))
        J = induced_J(s)
        dJ = np.moveaxis(fd_gradient(induced_J, s, d), -1, 0)
        expected = dJ + np.einsum("kil,lj->ikj", Gamma, J) - np.einsum("lij,kl->ikj", Gamma, J)
        got = nabla_J(point_geometry(imm.induced, s), 1)
        assert relative_error(got[0, :, 0], expected[0, :, 0]) < 1e-5
        assert relative_error(got, expected) < 1e-5


class TestLeeRestriction:
    def test_flat_both_sides_zero(self, flat2, src_points):
        rep = lee_restriction_check(catalog.coordinate_immersion(1, 2, flat2), src_points)
        assert rep.residual == 0.0 and rep.theta_bar_on_TM == 0.0 and rep.theta_on_M == 0.0

    def test_tangent_factor(self, src_points):
        rep = lee_restriction_check(slice_of(TANGENT_U), src_points)
        assert rep.residual < 1e-7
        assert rep.theta_bar_on_TM > DEFAULT.fail and rep.theta_on_M > DEFAULT.fail
        assert rep.induced_verdict is ClassVerdict.W

    def test_normal_factor(self, src_points):
        rep = lee_restriction_check(slice_of(NORMAL_U), src_points)
        assert rep.theta_bar_on_TM < 1e-8 and rep.theta_on_M < 1e-8
        assert rep.induced_verdict is ClassVerdict.K

    def test_larger_codimension(self):
        M = catalog.conformal_W(3, "x1 + 0.5 * x8")
        imm = catalog.coordinate_immersion(2, 3, M, 0.1)
        rep = lee_restriction_check(imm, halton_points(8, 3))
        assert rep.residual < 1e-7 and rep.induced_verdict is ClassVerdict.W


class TestUmbilicity:
    def test_flat_geodesic(self, flat2, src_points):
        rep = umbilicity_classify(catalog.coordinate_immersion(1, 2, flat2), src_points)
        assert rep.verdict is Umbilicity.TOTALLY_GEODESIC and rep.consistent

    def test_flat_ambient_any_holomorphic_submanifold(self, flat2, src_points):
        imm = reparametrized_slice(flat2)
        rep = umbilicity_classify(imm, src_points)
        assert rep.verdict is Umbilicity.TOTALLY_GEODESIC
        assert class_residuals(imm.induced, src_points).verdict is ClassVerdict.K

    @pytest.mark.parametrize(
        "u, verdict, induced",
        [
            (TANGENT_U, Umbilicity.TOTALLY_GEODESIC, ClassVerdict.W),
            (NORMAL_U, Umbilicity.TOTALLY_UMBILICAL, ClassVerdict.K),
            (MIXED_U, Umbilicity.TOTALLY_UMBILICAL, ClassVerdict.W),
        ],
    )
    def test_scenario_matrix(self, u, verdict, induced, src_points):
        imm = slice_of(u)
        rep = umbilicity_classify(imm, src_points)
        assert rep.verdict is verdict and rep.consistent
        assert lee_restriction_check(imm, src_points).induced_verdict is induced
        if verdict is Umbilicity.TOTALLY_UMBILICAL:
            assert rep.C_size > DEFAULT.fail

    @pytest.mark.parametrize("u", [NORMAL_U, MIXED_U, TANGENT_U, "x2 * x1 - cos(x8)"])
    def test_never_neither_when_h_identity_holds(self, u, src_points):
        imm = slice_of(u)
        if max(holomorphic_identity_residuals(imm, s).residuals["h_from_lee"] for s in src_points[:3]) < 1e-7:
            assert umbilicity_classify(imm, src_points).verdict is not Umbilicity.NEITHER

    @pytest.mark.parametrize("u", [NORMAL_U, MIXED_U, TANGENT_U, "x2 * x1 - cos(x8)"])
    def test_lee_forms_on_tangent_all_or_none(self, u, src_points):
        rep = umbilicity_classify(slice_of(u), src_points)
        zero = [DEFAULT.is_zero(v) for v in rep.theta_on_tangent]
        nonzero = [DEFAULT.is_nonzero(v) for v in rep.theta_on_tangent]
        assert all(zero) or all(nonzero)

    def test_exchange_property(self, src_points):
        rep = umbilicity_classify(slice_of(NORMAL_U), src_points)
        assert all(DEFAULT.is_zero(v) for v in rep.theta_on_tangent)
        assert all(v > DEFAULT.fail for v in rep.theta_on_normal)

    def test_neither_for_anisotropic_curving(self, flat2):
        # a graph bent in one normal direction only is not umbilical
        texts = ["x1", "0.3 * x1 * x1", "x2", "0.3 * x2 * x2", "x3", "0", "x4", "0"]
        imm = Immersion.from_text(flat2, 1, texts)
        rep = umbilicity_classify(imm, halton_points(4, 3, box=0.3))
        assert rep.verdict is Umbilicity.NEITHER
