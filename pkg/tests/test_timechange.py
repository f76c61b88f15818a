import math

import numpy as np
import pytest

import mrmlab as M
from mrmlab.geometry import build_chart
from mrmlab.measures import DiscreteMeasure
from mrmlab.timechange import corner_variance


def make(m=2, gamma2=1.0, T=0.5, R=0.5, seed=0):
    return M.ModelParams(m=m, gamma2=gamma2, T=T, R=R, seed=seed)


def shifted_measure_1d(params, grid_n, replica=0):
    meas = M.build_measure(M.sample_field(params, grid_n,
                                          replica_index=replica))
    return DiscreteMeasure(meas.atoms + params.R, meas.weights)


@pytest.fixture(scope="module")
def chart():
    p = make(gamma2=1.0, seed=23)
    layers = M.compose_chaos(p, 1, 20)
    chained = M.multi_step(layers, solver="exact")
    return p, layers, build_chart(chained, p, grid_n=20)


class TestTimeChange1d:
    def test_degenerate_clock_is_linear(self):
        p = make(m=1, gamma2=0.0)
        tc = M.time_change_1d(shifted_measure_1d(p, 256), 128, seed=1,
                              t_max=2 * p.R)
        # uniform measure: clock is linear up to one cell of quantization
        assert np.max(np.abs(tc.clock - tc.times)) <= 2 * p.R / 256

    def test_clock_nondecreasing(self):
        p = make(m=1, gamma2=1.0, seed=2)
        tc = M.time_change_1d(shifted_measure_1d(p, 256), 64, seed=2)
        assert np.all(np.diff(tc.clock) >= 0)

    def test_variance_ledger_telescopes_exactly(self):
        p = make(m=1, gamma2=0.8, seed=3)
        tc = M.time_change_1d(shifted_measure_1d(p, 512), 200, seed=3)
        assert float(np.cumsum(tc.increments_var)[-1]) == tc.clock[-1]
        assert tc.clock[-1] == pytest.approx(
            shifted_measure_1d(p, 512).total_mass, rel=1e-12)

    def test_determinism(self):
        p = make(m=1, gamma2=0.5, seed=4)
        a = M.time_change_1d(shifted_measure_1d(p, 128), 64, seed=9)
        b = M.time_change_1d(shifted_measure_1d(p, 128), 64, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_brownian_second_moment(self):
        # E[B(t)^2] = E[M([0,t])] = t within 3 SE (small run; the acceptance
        # suite runs the 500-replica configuration)
        p = make(m=1, gamma2=0.5, seed=5)
        reps = 200
        t_idx = 64  # midpoint of 128 intervals
        vals = np.empty(reps)
        ts = None
        for rep in range(reps):
            measure = shifted_measure_1d(p, 256, replica=rep)
            tc = M.time_change_1d(measure, 128, seed=1000 + rep)
            vals[rep] = tc.values[t_idx] ** 2
            ts = tc.times
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - ts[t_idx]) <= 3 * se

    def test_negative_domain_rejected(self):
        p = make(m=1, gamma2=0.0)
        meas = M.build_measure(M.sample_field(p, 64))
        with pytest.raises(ValueError):
            M.time_change_1d(meas, 32, seed=0)  # atoms straddle 0

    def test_needs_1d_measure(self):
        p = make(m=2, gamma2=0.0)
        meas = M.build_measure(M.sample_field(p, 16))
        with pytest.raises(ValueError):
            M.time_change_1d(meas, 32, seed=0)


class TestCornerField:
    def test_value_at_origin_is_zero(self, chart):
        p, _, ch = chart
        field = M.corner_field(ch, np.array([[0.0, 0.0]]), seed=1)
        assert field.values[0] == 0.0

    def test_total_variance_equals_ball_volume(self, chart):
        p, _, ch = chart
        field = M.corner_field(ch, np.array([[0.1, 0.1]]), seed=1)
        assert field.total_variance == pytest.approx(ch.C_R, rel=1e-12)

    def test_conditional_variance_identity(self):
        # Var[B(x) | M, Gamma] = (C_R / M(B_R)) * M(C(x) cap B_R), exactly;
        # the sinkhorn route carries the true layer weights on the ball
        # cells, so the right side can be recomputed from the raw measure
        from mrmlab.transport import ball_mask

        p = make(gamma2=1.0, seed=29)
        layers = M.compose_chaos(p, 1, 16)
        chained = M.multi_step(layers, solver="sinkhorn", epsilon_rel=0.02,
                               tol=1e-5)
        ch = build_chart(chained, p, grid_n=16)
        mask = ball_mask(layers[0].atoms, p.R)
        restricted = DiscreteMeasure(layers[0].atoms[mask],
                                     layers[1].weights[mask])
        for x in ([0.3, 0.2], [-0.25, 0.4], [0.5, -0.5], [0.04, 0.01]):
            lhs = corner_variance(ch, x)
            rhs = (ch.C_R / ch.mass_B_R) * restricted.corner_mass(x)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_conditional_variance_identity_exact_route(self, chart):
        # the exact route transports the resampled particle proxy; the
        # identity holds against that proxy's corner masses
        p, layers, ch = chart
        proxy = DiscreteMeasure(ch.chained.source_atoms.copy(),
                                ch.chained.source_weights.copy())
        for x in ([0.3, 0.2], [-0.25, 0.4], [0.04, 0.01]):
            lhs = corner_variance(ch, x)
            rhs = (ch.C_R / ch.mass_B_R) * proxy.corner_mass(x)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_conditional_covariance_matches_white_noise_mc(self, chart):
        # brute-force white-noise oracle over the shared atom set
        p, _, ch = chart
        x = np.array([0.35, 0.3])
        y = np.array([0.2, 0.45])
        n_noise = 10000
        vals = np.empty((n_noise, 2))
        for k in range(n_noise):
            f = M.corner_field(ch, np.array([x, y]), seed=50000 + k)
            vals[k] = f.values
        cov = np.cov(vals[:, 0], vals[:, 1])[0, 1]
        expected = corner_variance(ch, np.minimum(x, y))
        prods = vals[:, 0] * vals[:, 1]
        se = prods.std(ddof=1) / math.sqrt(n_noise)
        assert abs(cov - expected) <= 3 * se

    def test_eval_point_outside_domain_rejected(self, chart):
        _, _, ch = chart
        with pytest.raises(ValueError):
            M.corner_field(ch, np.array([[0.9, 0.0]]), seed=1)

    def test_negative_coordinate_convention(self, chart):
        # C(x) with x_k < 0 is the cube [x_k, 0]; mass strictly in the
        # negative quadrant is seen by negative corners only
        p, layers, ch = chart
        v_neg = corner_variance(ch, [-0.5, -0.5])
        v_pos = corner_variance(ch, [0.5, 0.5])
        assert v_neg > 0 and v_pos > 0
        total = corner_variance(ch, [0.5, 0.5]) + corner_variance(ch, [-0.5, -0.5]) \
            + corner_variance(ch, [-0.5, 0.5]) + corner_variance(ch, [0.5, -0.5])
        assert total == pytest.approx(ch.C_R, rel=1e-9)

    def test_unconditional_moment_scaling(self):
        # E[B(lam x)^2]/E[B(x)^2] = lam^m * E[e^{Omega_lam}] = lam^m within
        # 10% for lam = 1/2; the conditional variance is a bounded mass
        # ratio that needs no transport, so plain Monte Carlo concentrates
        from mrmlab.measures import grid_atoms
        from mrmlab.transport import ball_mask

        p = make(gamma2=0.5, seed=1)
        grid_n, reps = 96, 300
        atoms = grid_atoms(p, grid_n)
        mask = ball_mask(atoms, p.R)
        cell = (2 * p.R / grid_n) ** 2
        x = np.array([0.3, 0.24])

        def cm(pt):
            lo = np.minimum(0.0, pt)
            hi = np.maximum(0.0, pt)
            return np.all((atoms >= lo) & (atoms <= hi), axis=1) & mask

        in_x, in_half = cm(x), cm(x / 2)
        v_x = np.empty(reps)
        v_half = np.empty(reps)
        for rep in range(reps):
            fs = M.sample_field(p, grid_n, replica_index=rep)
            w = np.exp(fs.values.ravel()) * cell
            ball_mass = w[mask].sum()
            v_x[rep] = w[in_x].sum() / ball_mass
            v_half[rep] = w[in_half].sum() / ball_mass
        ratio = v_half.mean() / v_x.mean()
        assert ratio == pytest.approx(0.5 ** p.m, rel=0.10)

    def test_disjoint_increments_conditionally_independent(self):
        # given the clock, Brownian increments over disjoint intervals are
        # independent: their covariance over noise replicas is 0 within MC
        p = make(m=1, gamma2=0.8, seed=6)
        measure = shifted_measure_1d(p, 256)
        n_noise = 4000
        a = np.empty(n_noise)
        b = np.empty(n_noise)
        for k in range(n_noise):
            tc = M.time_change_1d(measure, 64, seed=90000 + k,
                                  t_max=2 * p.R)
            a[k] = tc.values[16] - tc.values[4]
            b[k] = tc.values[48] - tc.values[32]
        prods = a * b
        se = prods.std(ddof=1) / math.sqrt(n_noise)
        assert abs(prods.mean()) <= 3 * se

    def test_deterministic_given_seed(self, chart):
        _, _, ch = chart
        pts = np.array([[0.2, 0.2], [-0.3, 0.1]])
        a = M.corner_field(ch, pts, seed=7)
        b = M.corner_field(ch, pts, seed=7)
        assert np.array_equal(a.values, b.values)
        c = M.corner_field(ch, pts, seed=8)
        assert not np.array_equal(a.values, c.values)
