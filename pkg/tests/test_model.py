import numpy as np
import pytest

from spdcl import cones
from spdcl.model import (BlockStructure, Constants, ProblemSpec, estimate_constants, eval_objective,
                         eval_theta, feasibility_residual, load_problem, problem_from_dict,
                         problem_to_dict, save_problem, spectral_norm)
from spdcl.oracles import LinearMap, Quadratic, QuadraticMap, SeparableL1Box, ZeroFunction
from spdcl.problems import gen_equality_qp, gen_inequality_qp, inequality_toy


def simple(G, J, A, b, cone, blocks=(1, 1), Omega=None):
    return ProblemSpec(blocks=BlockStructure(blocks), G=G, J=J, Phi=LinearMap(A, b), cone=cone, Omega=Omega)


class TestBlockStructure:
    def test_offsets(self):
        bs = BlockStructure((2, 3, 1))
        assert bs.n == 6 and bs.N == 3
        assert list(bs.offsets) == [0, 2, 5, 6]
        assert bs.slice(1) == slice(2, 5)

    def test_even(self):
        assert BlockStructure.even(6, 3).block_sizes == (2, 2, 2)
        with pytest.raises(ValueError):
            BlockStructure.even(5, 2)

    @pytest.mark.parametrize("sizes", [(), (0,), (2, -1)])
    def test_invalid(self, sizes):
        with pytest.raises(ValueError):
            BlockStructure(sizes)


class TestConstants:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            Constants(B_G=-1.0)

    def test_complete(self):
        assert not Constants(B_G=1.0).complete
        assert Constants(B_G=1.0, tau=1.0, T_bar=0.0).complete


class TestEvalObjective:
    def test_quadratic(self):
        prob = simple(Quadratic(np.eye(2)), [SeparableL1Box(1)] * 2, [[0.0, 0.0]], [0.0], cones.Zero(1))
        assert eval_objective(prob, [1.0, 1.0]) == 1.0

    def test_l1(self):
        prob = simple(ZeroFunction(2), [SeparableL1Box(1, 1.0)] * 2, [[0.0, 0.0]], [0.0], cones.Zero(1))
        assert eval_objective(prob, [1.0, -2.0]) == 3.0

    def test_box_sentinel(self):
        prob = simple(Quadratic(np.eye(2)), [SeparableL1Box(1, 0.0, 0.0, 1.0)] * 2,
                      [[0.0, 0.0]], [0.0], cones.Zero(1))
        assert eval_objective(prob, [2.0, 0.0]) == np.inf

    def test_dimension(self):
        prob = simple(Quadratic(np.eye(2)), [SeparableL1Box(1)] * 2, [[0.0, 0.0]], [0.0], cones.Zero(1))
        with pytest.raises(ValueError):
            eval_objective(prob, [1.0])


class TestEvalTheta:
    def test_equality_feasible(self):
        prob = simple(ZeroFunction(2), [SeparableL1Box(1)] * 2, [[1.0, 1.0]], [1.0], cones.Zero(1))
        np.testing.assert_array_equal(eval_theta(prob, [0.5, 0.5]), [0.0])

    def test_unit_circle(self):
        Omega = QuadraticMap([2 * np.eye(2)])
        prob = simple(ZeroFunction(2), [SeparableL1Box(1)] * 2, [[0.0, 0.0]], [1.0],
                      cones.NonNegOrthant(1), Omega=Omega)
        np.testing.assert_array_equal(eval_theta(prob, [1.0, 0.0]), [0.0])

    def test_affine(self):
        prob = simple(ZeroFunction(2), [SeparableL1Box(1)] * 2, np.eye(2), [1.0, 1.0], cones.Zero(2))
        np.testing.assert_array_equal(eval_theta(prob, [3.0, 0.0]), [2.0, -1.0])


class TestFeasibility:
    def _orthant(self):
        return simple(ZeroFunction(1), [SeparableL1Box(1)], [[1.0]], [1.0], cones.NonNegOrthant(1), blocks=(1,))

    def test_violated(self):
        assert feasibility_residual(self._orthant(), [3.0]) == 2.0

    def test_satisfied(self):
        assert feasibility_residual(self._orthant(), [0.5]) == 0.0

    def test_zero_cone(self):
        prob = simple(ZeroFunction(2), [SeparableL1Box(1)] * 2, np.zeros((2, 2)), [-1.0, 2.0], cones.Zero(2))
        assert feasibility_residual(prob, [0.0, 0.0]) == pytest.approx(np.sqrt(5.0), abs=1e-15)


class TestEstimateConstants:
    def test_identity_hessian(self):
        prob = simple(Quadratic(np.eye(2)), [SeparableL1Box(1)] * 2, [[1.0, 1.0]], [1.0], cones.Zero(1))
        assert estimate_constants(prob, 10, 0).B_G == pytest.approx(1.0, abs=1e-12)

    def test_diag_hessian(self):
        H = np.diag([1.0, 4.0])
        oracle = np.linalg.eigvalsh(H)[-1]
        assert oracle == 4.0
        prob = simple(Quadratic(H), [SeparableL1Box(1)] * 2, [[1.0, 1.0]], [1.0], cones.Zero(1))
        assert estimate_constants(prob, 10, 0).B_G == pytest.approx(4.0, abs=1e-6)

    def test_zero_omega(self):
        prob = simple(Quadratic(np.eye(2)), [SeparableL1Box(1)] * 2, [[1.0, 1.0]], [1.0], cones.Zero(1))
        c = estimate_constants(prob, 10, 0)
        assert c.T_bar == 0.0
        assert c.tau == pytest.approx(np.sqrt(2.0), rel=1e-8)

    def test_user_override(self):
        prob = simple(Quadratic(np.eye(2)), [SeparableL1Box(1)] * 2, [[1.0, 1.0]], [1.0], cones.Zero(1))
        prob = prob.with_constants(B_G=7.0)
        assert estimate_constants(prob, 10, 0).B_G == 7.0

    def test_curvature(self):
        Omega = QuadraticMap([np.diag([1.0, 3.0])])
        prob = simple(ZeroFunction(2), [SeparableL1Box(1)] * 2, [[0.0, 0.0]], [1.0],
                      cones.NonNegOrthant(1), Omega=Omega)
        assert estimate_constants(prob, 10, 0).T_bar == pytest.approx(3.0)

    def test_bad_sample_count(self):
        prob = simple(Quadratic(np.eye(2)), [SeparableL1Box(1)] * 2, [[1.0, 1.0]], [1.0], cones.Zero(1))
        with pytest.raises(ValueError):
            estimate_constants(prob, 1, 0)


def test_spectral_norm_matches_svd(rng):
    for _ in range(10):
        M = rng.standard_normal((5, 8))
        assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)


class TestProperties:
    @pytest.fixture
    def prob(self):
        p, _ = gen_equality_qp(12, 4, 3, 5)
        Omega = QuadraticMap(np.stack([np.eye(12) * (j + 1) / 4 for j in range(4)]))
        return ProblemSpec(blocks=p.blocks, G=p.G, J=p.J, Phi=p.Phi, cone=cones.NonNegOrthant(4),
                           Omega=Omega, constants=p.constants)

    def test_descent_inequality(self, prob, rng):
        B_G = estimate_constants(prob, 50, 1).B_G
        for _ in range(200):
            u, v = rng.uniform(-1, 1, (2, prob.n))
            lhs = prob.G.value(u) - prob.G.value(v)
            rhs = prob.G.gradient(v) @ (u - v) + 0.5 * B_G * (u - v) @ (u - v)
            assert lhs <= rhs + 1e-9

    def test_theta_lipschitz(self, prob, rng):
        pairs = rng.uniform(-1, 1, (200, 2, prob.n))
        tau = max(np.linalg.norm(eval_theta(prob, u) - eval_theta(prob, v)) / np.linalg.norm(u - v)
                  for u, v in pairs)
        for u, v in pairs:
            assert np.linalg.norm(eval_theta(prob, u) - eval_theta(prob, v)) <= tau * np.linalg.norm(u - v) + 1e-9

    def test_block_gradient_consistency(self, prob, rng):
        u = rng.standard_normal(prob.n)
        assembled = np.concatenate([prob.block_gradient(u, i) for i in range(prob.N)])
        np.testing.assert_allclose(assembled, prob.G.gradient(u), atol=1e-12)

    def test_additivity(self, prob, rng):
        u = rng.standard_normal(prob.n)
        blockwise = prob.Omega.value(u) - prob.Phi.b
        for i in range(prob.N):
            blockwise = blockwise + prob.block_A(i) @ u[prob.blocks.slice(i)]
        np.testing.assert_allclose(eval_theta(prob, u), blockwise, atol=1e-12)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        prob, ref = gen_inequality_qp(6, 3, 3, 2, lam=0.1)
        path = tmp_path / "p.json"
        save_problem(path, prob, ref)
        back, ref2 = load_problem(path)
        np.testing.assert_array_equal(back.G.Q, prob.G.Q)
        np.testing.assert_array_equal(back.Phi.A, prob.Phi.A)
        assert back.cone == prob.cone
        assert back.constants == prob.constants
        assert back.J[0].lam == 0.1
        np.testing.assert_array_equal(ref2.u_star, ref.u_star)
        u = np.linspace(-1, 1, 6)
        assert eval_objective(back, u) == eval_objective(prob, u)

    def test_constant_term(self):
        prob, _ = inequality_toy()
        back, _ = problem_from_dict(problem_to_dict(prob))
        assert eval_objective(back, [1.0]) == 1.0
