import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdelab import models
from sdelab.errors import ModelDomainError, UsageError


class TestCubeRoot:
    def test_drift_at_one(self):
        sys1 = models.make_cube_root(1)
        assert models.drift_eval(sys1, 0.0, [1.0]) == pytest.approx([-1.0])

    def test_drift_zero_fixed_point(self):
        sys1 = models.make_cube_root(1)
        assert models.drift_eval(sys1, 0.0, [0.0])[0] == 0.0

    def test_diffusion_signed_root(self):
        sys1 = models.make_cube_root(1)
        # |x|^(2/3) at x=-8 is 4 under the signed-root convention
        np.testing.assert_allclose(models.diffusion_eval(sys1, 0.0, [-8.0]), [[4.0]])

    def test_diagonal_structure(self):
        sys2 = models.make_cube_root(2)
        sig = models.diffusion_eval(sys2, 0.0, [8.0, 27.0])
        np.testing.assert_allclose(sig, [[4.0, 0.0], [0.0, 9.0]])
        b = models.drift_eval(sys2, 0.0, [8.0, 27.0])
        assert b == pytest.approx([-2.0, -3.0])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=2))
    def test_signed_root_symmetry(self, xs):
        sys2 = models.make_cube_root(2)
        x = np.asarray(xs)
        assert np.array_equal(sys2.drift(0.0, -x), -sys2.drift(0.0, x))
        assert np.array_equal(sys2.diffusion(0.0, -x), sys2.diffusion(0.0, x))

    def test_batched_evaluation(self):
        sys3 = models.make_cube_root(3)
        X = np.random.default_rng(0).normal(size=(17, 3))
        b = sys3.drift(0.0, X)
        s = sys3.diffusion(0.0, X)
        assert b.shape == (17, 3) and s.shape == (17, 3, 3)
        for i in range(17):
            assert np.array_equal(b[i], sys3.drift(0.0, X[i]))
            assert np.array_equal(s[i], sys3.diffusion(0.0, X[i]))


class TestRotation:
    def test_coefficients_at_unit_x(self):
        rot = models.make_rotation(1.0)
        assert models.drift_eval(rot, 0.0, [1.0, 0.0]) == pytest.approx([-1.0, 0.0])
        sig = models.diffusion_eval(rot, 0.0, [1.0, 0.0])
        np.testing.assert_allclose(sig, [[0.0], [1.0]])

    def test_orthogonality(self):
        rot = models.make_rotation(1.0)
        rng = np.random.default_rng(5)
        X = rng.normal(size=(500, 2)) * 3.0
        s = rot.diffusion(0.0, X)
        stx = np.einsum("pij,pi->pj", s, X)
        assert np.abs(stx).max() <= 1e-12

    def test_zero_at_origin(self):
        rot = models.make_rotation(1.0)
        assert np.all(models.drift_eval(rot, 0.0, [0.0, 0.0]) == 0.0)
        assert np.all(models.diffusion_eval(rot, 0.0, [0.0, 0.0]) == 0.0)

    def test_margin_identity_at_unit_radius(self):
        # |sigma|^2 + 2<x,b> = |x|^(2r+2) - 2|x|^(2r+2) = -1 at |x| = 1
        rot = models.make_rotation(1.0)
        x = np.array([1.0, 0.0])
        s = rot.diffusion(0.0, x)
        val = (s**2).sum() + 2.0 * float(x @ rot.drift(0.0, x))
        assert val == pytest.approx(-1.0, abs=1e-14)


class TestOracles:
    def test_ou_drift_exact(self):
        ou = models.make_oracle("ou", theta=2.5, vol=0.0)
        x = np.array([3.0, ])
        assert np.array_equal(ou.drift(0.0, x), -2.5 * x)

    def test_ou_noiseless_decay(self):
        ou = models.make_oracle("ou", theta=1.0, vol=0.0)
        inc = np.zeros((8, 1))
        val = ou.exact_solution(1.0, np.array([1.0]), inc, 1.0)
        assert val == pytest.approx([math.exp(-1.0)])

    def test_gbm_zero_vol_constant(self):
        gbm = models.make_oracle("gbm", mu=0.0, vol=0.0)
        inc = np.zeros((4, 1))
        for t in (0.25, 0.5, 1.0):
            assert gbm.exact_solution(t, np.array([2.0]), inc, 1.0) == pytest.approx([2.0])

    def test_blowup_time(self):
        assert models.blowup_time(0.0) == pytest.approx(math.pi / 2)
        bl = models.make_oracle("deterministic_blowup")
        inc = np.zeros((4, 1))
        assert bl.exact_solution(1.0, np.array([0.0]), inc, 1.0) == pytest.approx([math.tan(1.0)])
        with pytest.raises(ModelDomainError):
            bl.exact_solution(1.6, np.array([0.0]), inc, 2.0)

    def test_zero_diffusion_matrix(self):
        bl = models.make_oracle("deterministic_blowup")
        assert np.all(models.diffusion_eval(bl, 0.0, [5.0]) == 0.0)

    def test_bad_params_rejected(self):
        with pytest.raises(UsageError):
            models.make_oracle("ou", theta=-1.0)
        with pytest.raises(UsageError):
            models.make_oracle("ou", nope=1.0)
        with pytest.raises(UsageError):
            models.make_oracle("unknown")


class TestEvalGuards:
    def test_dimension_mismatch(self):
        sys2 = models.make_cube_root(2)
        with pytest.raises(UsageError):
            models.drift_eval(sys2, 0.0, [1.0])
        with pytest.raises(UsageError):
            models.diffusion_eval(sys2, 0.0, [1.0, 2.0, 3.0])

    def test_nonfinite_output_names_coordinate(self):
        bad = models.SdeSystem(
            d=2, m=1,
            drift=lambda t, x: np.stack([x[..., 0], x[..., 1] / 0.0], axis=-1),
            diffusion=lambda t, x: np.zeros(x.shape + (1,)),
            label="bad",
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            with pytest.raises(ModelDomainError, match="coordinate 1"):
                models.drift_eval(bad, 0.0, [1.0, 1.0])


class TestControls:
    def test_log_control_typical_value(self):
        eta = models.log_control("eta", R=1.0)
        # x log(1/x) at x = 1/e equals 1/e
        assert models.control_eval(eta, math.exp(-1.0)) == pytest.approx(math.exp(-1.0))

    def test_zero_at_origin(self):
        assert models.control_eval(models.log_control("eta"), 0.0) == 0.0
        assert models.control_eval(models.linear_control("gamma_r"), 0.0) == 0.0

    def test_identity_control(self):
        gamma = models.linear_control("gamma", slope=1.0)
        assert models.control_eval(gamma, 3.0) == 3.0

    def test_domain_guard(self):
        eta = models.log_control("eta")
        with pytest.raises(UsageError):
            models.control_eval(eta, 1.5)
        with pytest.raises(UsageError):
            models.control_eval(eta, -0.1)

    def test_nondecreasing_on_monotone_domain(self):
        for ctrl in (models.log_control("eta", R=10.0),
                     models.linear_control("gamma_r", slope=2.0),
                     models.linear_control("gamma", slope=1.0)):
            hi = min(ctrl.monotone_max, 1.0)
            grid = np.linspace(0.0, hi * 0.999, 400)
            vals = ctrl(grid)
            assert np.all(np.diff(vals) >= -1e-15), ctrl.label

    def test_reciprocal_integral_diverges(self):
        # int_x^eps0 ds/ctrl grows as x drops; the absolute ">10" growth
        # only holds for linear controls (log controls grow like log log)
        from sdelab.quadrature import adaptive_simpson

        def tail(ctrl, x):
            return adaptive_simpson(lambda s: 1.0 / float(ctrl(s)), x, ctrl.eps0,
                                    rel_tol=1e-10).value

        lin = models.linear_control("gamma_r", slope=1.0)
        assert tail(lin, 1e-12) - tail(lin, 1e-4) > 10.0

        eta = models.log_control("eta", R=10.0)
        vals = [tail(eta, 10.0 ** (-k)) for k in range(4, 13, 2)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] > 1.1 * vals[0]

    def test_bad_constants_rejected(self):
        with pytest.raises(UsageError):
            models.ControlFunction(kind="eta", fn=lambda x: x, label="x", c0=1.5)
        with pytest.raises(UsageError):
            models.ControlFunction(kind="nope", fn=lambda x: x, label="x")


class TestRegistry:
    def test_unknown_model_lists_builtins(self):
        with pytest.raises(UsageError, match="cube-root"):
            models.build_model("nope")

    def test_unknown_params_rejected(self):
        with pytest.raises(UsageError):
            models.build_model("cube-root", {"theta": 1.0})

    def test_builds(self):
        assert models.build_model("rotation", {"r": 2.0}).d == 2
        assert models.build_control("linear", "gamma_r", {"slope": 2.0}).kind == "gamma_r"
