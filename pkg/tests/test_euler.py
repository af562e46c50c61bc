import math

import numpy as np
import pytest

from sdelab import euler, models, noise
from sdelab.errors import ModelDomainError, UsageError


def zero_system(d=1, m=1):
    return models.SdeSystem(
        d=d, m=m,
        drift=lambda t, x: np.zeros_like(x),
        diffusion=lambda t, x: np.zeros(x.shape + (m,)),
        label="zero",
    )


def linear_decay(d=1):
    return models.SdeSystem(
        d=d, m=1,
        drift=lambda t, x: -x,
        diffusion=lambda t, x: np.zeros(x.shape + (1,)),
        label="decay",
    )


class TestEulerPath:
    def test_constant_path(self):
        tree = noise.sample_tree(1, 1.0, 5, seed=0)
        cfg = euler.EulerConfig(level=5, T=1.0, R_stop=10.0, x0=[2.0])
        rec = euler.euler_path(zero_system(), cfg, tree)
        assert rec.stopped_at is None
        assert np.all(rec.states == 2.0)
        assert rec.times.size == 33

    def test_linear_recursion_closed_form(self):
        tree = noise.sample_tree(1, 1.0, 6, seed=1)
        cfg = euler.EulerConfig(level=6, T=1.0, R_stop=10.0, x0=[1.0])
        rec = euler.euler_path(linear_decay(), cfg, tree)
        h = 2.0**-6
        ks = np.arange(65)
        np.testing.assert_allclose(rec.states[:, 0], (1 - h) ** ks, rtol=1e-12)

    def test_blowup_stops_on_radius(self):
        bl = models.make_oracle("deterministic_blowup")
        tree = noise.sample_tree(1, 3.0, 10, seed=2)
        cfg = euler.EulerConfig(level=10, T=3.0, R_stop=1e6, x0=[0.0])
        rec = euler.euler_path(bl, cfg, tree)
        assert rec.stopped_at is not None
        idx, reason = rec.stopped_at
        assert reason == "radius"
        t_exit = rec.times[idx]
        assert 1.4 <= t_exit <= 1.7  # discrete blow-up brackets pi/2

    def test_truncation_correctness(self):
        bl = models.make_oracle("deterministic_blowup")
        tree = noise.sample_tree(1, 3.0, 8, seed=2)
        cfg = euler.EulerConfig(level=8, T=3.0, R_stop=100.0, x0=[0.0])
        rec = euler.euler_path(bl, cfg, tree)
        norms = np.abs(rec.states[:, 0])
        assert np.all(norms[:-1] < 100.0)
        assert norms[-1] >= 100.0

    def test_replay_determinism(self):
        ou = models.make_oracle("ou", theta=1.0, vol=1.0)
        tree = noise.sample_tree(1, 1.0, 6, seed=3)
        cfg = euler.EulerConfig(level=6, T=1.0, R_stop=1e6, x0=[1.0])
        rec = euler.euler_path(ou, cfg, tree)
        inc = noise.increments_at_level(tree, 6)
        h = cfg.h
        for k in range(rec.times.size - 1):
            nxt = euler.step_states(ou, k * h, rec.states[k][None, :], h, inc[k][None, :])
            assert np.array_equal(nxt[0], rec.states[k + 1])

    def test_zero_noise_equals_explicit_ode_euler(self):
        sys1 = linear_decay()
        tree = noise.sample_tree(1, 1.0, 5, seed=4)
        cfg = euler.EulerConfig(level=5, T=1.0, R_stop=10.0, x0=[1.0])
        rec = euler.euler_path(sys1, cfg, tree)
        x = np.array([1.0])
        h = cfg.h
        for k in range(32):
            x = x + (-x) * h
            assert np.array_equal(rec.states[k + 1], x)

    def test_sup_norm_running_nondecreasing(self):
        ou = models.make_oracle("ou", theta=1.0, vol=1.0)
        tree = noise.sample_tree(1, 1.0, 8, seed=5)
        cfg = euler.EulerConfig(level=8, T=1.0, R_stop=1e6, x0=[0.0])
        rec = euler.euler_path(ou, cfg, tree)
        assert np.all(np.diff(rec.sup_norm_running) >= 0.0)
        assert rec.sup_norm_running[-1] == np.linalg.norm(rec.states, axis=1).max()

    def test_nonfinite_coefficient_raises(self):
        bad = models.SdeSystem(
            d=1, m=1,
            drift=lambda t, x: np.where(np.abs(x) > 0.5, np.inf, 0.0) * np.ones_like(x),
            diffusion=lambda t, x: np.zeros(x.shape + (1,)),
            label="bad",
        )
        tree = noise.sample_tree(1, 1.0, 3, seed=6)
        cfg = euler.EulerConfig(level=3, T=1.0, R_stop=10.0, x0=[1.0])
        with pytest.raises(ModelDomainError):
            euler.euler_path(bad, cfg, tree)

    def test_tree_mismatch_rejected(self):
        tree = noise.sample_tree(1, 2.0, 5, seed=0)
        cfg = euler.EulerConfig(level=5, T=1.0, R_stop=10.0, x0=[1.0])
        with pytest.raises(UsageError):
            euler.euler_path(zero_system(), cfg, tree)
        tree2 = noise.sample_tree(1, 1.0, 4, seed=0)
        with pytest.raises(UsageError):
            euler.euler_path(zero_system(), cfg, tree2)

    def test_config_guards(self):
        with pytest.raises(UsageError):
            euler.EulerConfig(level=5, T=1.0, R_stop=1.0, x0=[2.0])
        with pytest.raises(UsageError):
            euler.EulerConfig(level=5, T=-1.0, R_stop=10.0, x0=[1.0])


class TestCoupledResolutions:
    def test_degenerate_coupling_rejected(self):
        tree = noise.sample_tree(1, 1.0, 6, seed=0)
        cfg = euler.EulerConfig(level=4, T=1.0, R_stop=10.0, x0=[1.0])
        with pytest.raises(UsageError):
            euler.coupled_resolutions(zero_system(), 4, 4, cfg, tree)

    def test_zero_system_zero_xi(self):
        tree = noise.sample_tree(1, 1.0, 6, seed=0)
        cfg = euler.EulerConfig(level=4, T=1.0, R_stop=10.0, x0=[1.0])
        rec = euler.coupled_resolutions(zero_system(), 4, 6, cfg, tree)
        assert np.all(rec.xi == 0.0)
        assert rec.tau_nm is None
        assert rec.min_distance == 0.0

    def test_paths_match_independent_runs_bitwise(self):
        ou = models.make_oracle("ou", theta=1.0, vol=1.0)
        tree = noise.sample_tree(1, 1.0, 8, seed=7)
        cfg = euler.EulerConfig(level=5, T=1.0, R_stop=1e6, x0=[1.0])
        rec = euler.coupled_resolutions(ou, 5, 8, cfg, tree)
        solo_c = euler.euler_path(ou, euler.EulerConfig(level=5, T=1.0, R_stop=1e6, x0=[1.0]), tree)
        solo_f = euler.euler_path(ou, euler.EulerConfig(level=8, T=1.0, R_stop=1e6, x0=[1.0]), tree)
        assert np.array_equal(rec.path_a.states, solo_c.states)
        # fine path is retained on the coarse grid only
        assert np.array_equal(rec.path_b.states, solo_f.states[::8])
        diff = solo_f.states[::8] - solo_c.states
        assert np.array_equal(rec.xi, (diff**2).sum(axis=1))

    def test_xi_invariants(self):
        cs = models.make_cube_root(1)
        tree = noise.sample_tree(1, 1.0, 9, seed=8)
        cfg = euler.EulerConfig(level=5, T=1.0, R_stop=1e6, x0=[1.0])
        rec = euler.coupled_resolutions(cs, 5, 9, cfg, tree)
        assert np.all(rec.xi >= 0.0)
        assert rec.min_distance**2 == pytest.approx(rec.xi.min(), rel=1e-15)

    def test_defect_zero_at_matching_tree_level(self):
        ou = models.make_oracle("ou", theta=1.0, vol=1.0)
        tree = noise.sample_tree(1, 1.0, 6, seed=9)
        cfg = euler.EulerConfig(level=6, T=1.0, R_stop=1e6, x0=[1.0])
        rec = euler.coupled_starts(ou, cfg, [0.0], [1.0], tree)
        assert np.all(rec.defect == 0.0)

    def test_defect_matches_manual_interpolant(self):
        ou = models.make_oracle("ou", theta=1.0, vol=1.0)
        tree = noise.sample_tree(1, 1.0, 6, seed=10)
        cfg = euler.EulerConfig(level=4, T=1.0, R_stop=1e6, x0=[1.0])
        rec = euler.coupled_resolutions(ou, 4, 6, cfg, tree)
        # cell 0: interior fine nodes at j = 1..3, B partial sums of finest cells
        h_f = tree.T / 64
        x0 = rec.path_a.states[0]
        b = ou.drift(0.0, x0)
        s = ou.diffusion(0.0, x0)
        worst = 0.0
        bsum = np.zeros(1)
        for j in range(1, 4):
            bsum = bsum + tree.increments[j - 1]
            p = b * (j * h_f) + s @ bsum
            worst = max(worst, float(np.linalg.norm(p)))
        assert rec.defect[0] == pytest.approx(worst, rel=1e-12)


class TestCoupledStarts:
    def test_equal_starts_rejected(self):
        tree = noise.sample_tree(1, 1.0, 5, seed=0)
        cfg = euler.EulerConfig(level=5, T=1.0, R_stop=10.0, x0=[0.0])
        with pytest.raises(UsageError):
            euler.coupled_starts(zero_system(), cfg, [1.0], [1.0], tree)

    def test_zero_system_distance_constant(self):
        tree = noise.sample_tree(1, 1.0, 5, seed=0)
        cfg = euler.EulerConfig(level=5, T=1.0, R_stop=10.0, x0=[0.0])
        rec = euler.coupled_starts(zero_system(), cfg, [0.0], [1.0], tree)
        assert rec.min_distance == 1.0

    def test_linear_contraction_min_distance(self):
        tree = noise.sample_tree(1, 1.0, 6, seed=1)
        cfg = euler.EulerConfig(level=6, T=1.0, R_stop=10.0, x0=[0.0])
        rec = euler.coupled_starts(linear_decay(), cfg, [0.0], [1.0], tree)
        h = 2.0**-6
        assert rec.min_distance == pytest.approx((1 - h) ** 64, rel=1e-12)
        assert rec.min_distance == pytest.approx(math.exp(-1.0), rel=0.01)

    def test_first_passage_lookup(self):
        tree = noise.sample_tree(1, 1.0, 4, seed=2)
        cfg = euler.EulerConfig(level=4, T=1.0, R_stop=10.0, x0=[0.0])
        rec = euler.coupled_starts(linear_decay(), cfg, [0.0], [1.0], tree)
        assert rec.first_passage_below(0.5) is not None
        assert rec.first_passage_below(1e-6) is None


class TestCsv:
    def test_path_csv_header_and_flag(self):
        bl = models.make_oracle("deterministic_blowup")
        tree = noise.sample_tree(1, 3.0, 6, seed=2)
        cfg = euler.EulerConfig(level=6, T=3.0, R_stop=10.0, x0=[0.0])
        rec = euler.euler_path(bl, cfg, tree)
        lines = rec.to_csv().splitlines()
        assert lines[0] == "t,x1,stopped"
        assert lines[-1].endswith(",radius")
        assert all(line.endswith(",") for line in lines[1:-1])

    def test_coupled_csv_header(self):
        tree = noise.sample_tree(1, 1.0, 4, seed=0)
        cfg = euler.EulerConfig(level=4, T=1.0, R_stop=10.0, x0=[0.0])
        rec = euler.coupled_starts(zero_system(), cfg, [0.0], [1.0], tree)
        lines = rec.to_csv().splitlines()
        assert lines[0] == "t,x1,stopped,xi,defect_norm"
        assert len(lines) == 18

    def test_17_digit_floats(self):
        from sdelab.serialize import fmt_float
        assert fmt_float(math.pi) == "3.1415926535897931"
        assert fmt_float(0.1) == "0.10000000000000001"
        assert float(fmt_float(1.0 / 3.0)) == 1.0 / 3.0


class TestStridedRecording:
    def test_stride_records_coarse_grid_only(self):
        ou = models.make_oracle("ou", theta=1.0, vol=1.0)
        tree = noise.sample_tree(1, 1.0, 8, seed=21)
        cfg = euler.EulerConfig(level=8, T=1.0, R_stop=1e6, x0=[1.0])
        full = euler.euler_path(ou, cfg, tree)
        strided = euler.euler_path(ou, cfg, tree, record_stride=8)
        assert np.array_equal(strided.states, full.states[::8])
        assert np.array_equal(strided.times, full.times[::8])

    def test_stop_between_retained_nodes_freezes_record(self):
        bl = models.make_oracle("deterministic_blowup")
        tree = noise.sample_tree(1, 3.0, 10, seed=22)
        cfg = euler.EulerConfig(level=10, T=3.0, R_stop=1e6, x0=[0.0])
        strided = euler.euler_path(bl, cfg, tree, record_stride=16)
        assert strided.stopped_at is not None
        idx, reason = strided.stopped_at
        assert reason == "radius"
        assert idx == strided.states.shape[0] - 1
        assert strided.times[idx] <= 1.7

    def test_bad_stride_rejected(self):
        tree = noise.sample_tree(1, 1.0, 4, seed=0)
        cfg = euler.EulerConfig(level=4, T=1.0, R_stop=10.0, x0=[1.0])
        with pytest.raises(UsageError):
            euler.euler_path(models.make_cube_root(1), cfg, tree, record_stride=3)
