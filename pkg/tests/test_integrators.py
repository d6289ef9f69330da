import numpy as np
import pytest

from chieq import (
    ConfigError,
    ConvergenceError,
    State,
    StepperConfig,
    build_ops,
    gauss_step,
    gauss_tableau,
    initial_q,
    integrate,
    lcns_bootstrap,
    lcns_step,
    make_grid,
    mass,
    parse_scheme,
    quad_energy,
    rhs_ieq,
    steps_for,
)
from chieq.integrators.gauss import _rhs_jacobian
from oracles import random_smooth_field

TWO_PI = 2.0 * np.pi


@pytest.fixture
def setup():
    grid = make_grid(0.0, TWO_PI, 64)
    return grid, build_ops(grid)


def smooth_state(ops, seed, amp=1.0):
    rng = np.random.default_rng(seed)
    return State.from_initial(ops, random_smooth_field(rng, ops.grid.N, amp=amp))


class TestParseScheme:
    @pytest.mark.parametrize(
        "name,expected",
        [
            ("lcns", ("lcns", 0)),
            ("LCNS", ("lcns", 0)),
            (" gauss2 ", ("gauss", 1)),
            ("gauss4", ("gauss", 2)),
            ("gauss6", ("gauss", 3)),
            ("gauss16", ("gauss", 8)),
        ],
    )
    def test_valid(self, name, expected):
        assert parse_scheme(name) == expected

    @pytest.mark.parametrize("name", ["gauss3", "gauss0", "gauss", "euler", "", "gauss-4", 4])
    def test_invalid(self, name):
        with pytest.raises(ConfigError):
            parse_scheme(name)


class TestStepsFor:
    def test_exact_multiples(self):
        assert steps_for(1.0, 1e-3) == 1000
        assert steps_for(50.0, 1e-4) == 500000
        assert steps_for(1.0, 1.0 / 30.0) == 30
        assert steps_for(0.0, 0.1) == 0

    @pytest.mark.parametrize("T,tau", [(1.0, 0.3), (1.0, -0.1), (-1.0, 0.1), (np.inf, 0.1)])
    def test_invalid(self, T, tau):
        with pytest.raises(ConfigError):
            steps_for(T, tau)


class TestStepperConfig:
    def test_defaults(self):
        cfg = StepperConfig(tau=0.01)
        assert cfg.stage_tol == 1e-13
        assert cfg.max_iters == 200
        assert cfg.damping == 1.0
        assert cfg.stage_solver == "fixed_point"

    def test_negative_tau_allowed_for_single_steps(self):
        assert StepperConfig(tau=-0.01).tau == -0.01

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"tau": 0.0},
            {"tau": np.nan},
            {"tau": 0.01, "stage_tol": 0.0},
            {"tau": 0.01, "stage_tol": -1e-13},
            {"tau": 0.01, "max_iters": 0},
            {"tau": 0.01, "damping": 0.0},
            {"tau": 0.01, "damping": 1.5},
            {"tau": 0.01, "stage_solver": "broyden"},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            StepperConfig(**kwargs)


class TestGaussStep:
    def test_zero_state_is_fixed_point(self, setup):
        grid, ops = setup
        z = State(u=np.zeros(grid.N), q=np.zeros(grid.N))
        out = gauss_step(ops, gauss_tableau(2), StepperConfig(tau=0.05), z)
        assert np.array_equal(out.u, z.u)
        assert np.array_equal(out.q, z.q)

    def test_one_stage_is_implicit_midpoint(self, setup):
        # solve u1 = u0 + tau f((y0 + y1)/2) independently and compare
        grid, ops = setup
        s0 = smooth_state(ops, 1)
        tau = 0.01
        yu, yq = s0.u.copy(), s0.q.copy()
        for _ in range(300):
            du, dq = rhs_ieq(ops, yu, yq)
            yu_new = s0.u + 0.5 * tau * du
            yq_new = s0.q + 0.5 * tau * dq
            delta = max(np.max(np.abs(yu_new - yu)), np.max(np.abs(yq_new - yq)))
            yu, yq = yu_new, yq_new
            if delta < 1e-16:
                break
        midpoint_u = 2.0 * yu - s0.u
        midpoint_q = 2.0 * yq - s0.q

        out = gauss_step(ops, gauss_tableau(1), StepperConfig(tau=tau), s0)
        assert np.max(np.abs(out.u - midpoint_u)) < 1e-12
        assert np.max(np.abs(out.q - midpoint_q)) < 1e-12

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_time_symmetry(self, setup, s):
        grid, ops = setup
        s0 = smooth_state(ops, 2)
        tab = gauss_tableau(s)
        fwd = gauss_step(ops, tab, StepperConfig(tau=0.01), s0)
        back = gauss_step(ops, tab, StepperConfig(tau=-0.01), fwd)
        tol = 100 * 1e-13
        assert np.max(np.abs(back.u - s0.u)) < tol
        assert np.max(np.abs(back.q - s0.q)) < tol

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_energy_and_mass_per_step(self, setup, s):
        grid, ops = setup
        s0 = smooth_state(ops, 3)
        cfg = StepperConfig(tau=0.02)
        e0 = quad_energy(grid, s0)
        m0 = mass(grid, s0.u)
        out = gauss_step(ops, gauss_tableau(s), cfg, s0)
        assert abs(quad_energy(grid, out) - e0) <= 10 * cfg.stage_tol * max(1.0, abs(e0))
        assert abs(mass(grid, out.u) - m0) <= 10 * cfg.stage_tol * max(1.0, abs(m0))

    def test_energy_drift_over_many_steps(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 4)
        e0 = quad_energy(grid, s0)
        cfg = StepperConfig(tau=0.01)
        tab = gauss_tableau(2)
        s = s0
        for _ in range(200):
            s = gauss_step(ops, tab, cfg, s)
        assert abs(quad_energy(grid, s) - e0) <= 1e-12 * max(1.0, abs(e0))

    def test_newton_matches_fixed_point(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 5)
        tab = gauss_tableau(2)
        a = gauss_step(ops, tab, StepperConfig(tau=0.02), s0)
        b = gauss_step(ops, tab, StepperConfig(tau=0.02, stage_solver="newton"), s0)
        assert np.max(np.abs(a.u - b.u)) < 1e-11
        assert np.max(np.abs(a.q - b.q)) < 1e-11

    def test_jacobian_against_finite_differences(self):
        grid = make_grid(0.0, 3.0, 8)
        ops = build_ops(grid)
        rng = np.random.default_rng(12)
        u = random_smooth_field(rng, 8)
        q = random_smooth_field(rng, 8)
        du, _ = rhs_ieq(ops, u, q)
        jac = _rhs_jacobian(ops, u, du)
        eps = 1e-7
        for _ in range(5):
            v = rng.standard_normal(16)
            v /= np.max(np.abs(v))
            up, qp = u + eps * v[:8], q + eps * v[8:]
            um, qm = u - eps * v[:8], q - eps * v[8:]
            fp = np.concatenate(rhs_ieq(ops, up, qp))
            fm = np.concatenate(rhs_ieq(ops, um, qm))
            fd = (fp - fm) / (2 * eps)
            assert np.max(np.abs(jac @ v - fd)) < 1e-6 * max(1.0, np.max(np.abs(fd)))

    def test_iteration_budget_exhaustion_raises(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 6)
        cfg = StepperConfig(tau=0.02, max_iters=1)
        with pytest.raises(ConvergenceError):
            gauss_step(ops, gauss_tableau(2), cfg, s0)

    def test_non_finite_state_raises(self, setup):
        grid, ops = setup
        huge = np.full(grid.N, 1e200)
        with np.errstate(all="ignore"):
            s0 = State(u=huge, q=initial_q(ops, huge))
            with pytest.raises(ConvergenceError):
                gauss_step(ops, gauss_tableau(1), StepperConfig(tau=0.01), s0)


class TestLcns:
    def test_zero_state_is_fixed_point(self, setup):
        grid, ops = setup
        z = State(u=np.zeros(grid.N), q=np.zeros(grid.N))
        out = lcns_bootstrap(ops, StepperConfig(tau=0.01), z)
        assert np.array_equal(out.u, z.u)
        out2 = lcns_step(ops, StepperConfig(tau=0.01), z, out)
        assert np.array_equal(out2.u, z.u)

    def test_bootstrap_preserves_quad_energy(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 7)
        e0 = quad_energy(grid, s0)
        out = lcns_bootstrap(ops, StepperConfig(tau=0.01), s0)
        assert abs(quad_energy(grid, out) - e0) <= 1e-12 * max(1.0, abs(e0))

    def test_step_preserves_quad_energy_and_mass(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 8)
        cfg = StepperConfig(tau=0.01)
        e0 = quad_energy(grid, s0)
        m0 = mass(grid, s0.u)
        prev, curr = s0, lcns_bootstrap(ops, cfg, s0)
        for _ in range(20):
            prev, curr = curr, lcns_step(ops, cfg, prev, curr)
        assert abs(quad_energy(grid, curr) - e0) <= 1e-12 * max(1.0, abs(e0))
        assert abs(mass(grid, curr.u) - m0) <= 1e-12 * max(1.0, abs(m0))

    def test_bootstrap_close_to_midpoint_step(self, setup):
        # both are second-order one-step maps, so they agree to O(tau^2)
        grid, ops = setup
        s0 = smooth_state(ops, 9)
        tab = gauss_tableau(1)

        def gap(tau):
            a = lcns_bootstrap(ops, StepperConfig(tau=tau), s0)
            b = gauss_step(ops, tab, StepperConfig(tau=tau), s0)
            return np.max(np.abs(a.u - b.u))

        g1, g2 = gap(0.02), gap(0.01)
        assert g1 < 5e-3
        assert g1 / g2 > 3.5

    def test_divergence_detected(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 10, amp=2.0)
        with pytest.raises(ConvergenceError, match="diverged"):
            lcns_bootstrap(ops, StepperConfig(tau=1e6), s0)


class TestIntegrate:
    def test_zero_horizon_returns_initial_state(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 11)
        traj = integrate("gauss4", ops, StepperConfig(tau=0.1), s0, 0.0)
        assert traj.state is s0
        assert traj.records == []
        assert traj.samples == []

    def test_record_cadence(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 12)
        traj = integrate("gauss2", ops, StepperConfig(tau=0.01), s0, 0.1, cadence=3)
        times = [r.t for r in traj.records]
        assert times == pytest.approx([0.0, 0.03, 0.06, 0.09, 0.1])

    def test_default_cadence_short_run_records_every_step(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 13)
        traj = integrate("gauss2", ops, StepperConfig(tau=0.01), s0, 0.05)
        assert len(traj.records) == 6

    def test_sampler_collects_at_record_times(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 14)
        traj = integrate(
            "lcns",
            ops,
            StepperConfig(tau=0.01),
            s0,
            0.05,
            cadence=2,
            sampler=lambda t, st: float(np.max(st.u)),
        )
        assert [t for t, _ in traj.samples] == [r.t for r in traj.records]
        assert all(isinstance(v, float) for _, v in traj.samples)

    def test_lcns_single_step_runs_bootstrap_only(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 15)
        traj = integrate("lcns", ops, StepperConfig(tau=0.05), s0, 0.05)
        expected = lcns_bootstrap(ops, StepperConfig(tau=0.05), s0)
        assert np.array_equal(traj.state.u, expected.u)

    def test_lcns_two_steps_use_history(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 16)
        cfg = StepperConfig(tau=0.05)
        traj = integrate("lcns", ops, cfg, s0, 0.1)
        first = lcns_bootstrap(ops, cfg, s0)
        second = lcns_step(ops, cfg, s0, first)
        assert np.array_equal(traj.state.u, second.u)

    def test_failure_message_names_step(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 17)
        cfg = StepperConfig(tau=0.05, max_iters=1)
        with pytest.raises(ConvergenceError, match="step 1 of 2"):
            integrate("gauss4", ops, cfg, s0, 0.1)

    def test_invalid_configurations(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 18)
        with pytest.raises(ConfigError):
            integrate("gauss4", ops, StepperConfig(tau=0.3), s0, 1.0)
        with pytest.raises(ConfigError):
            integrate("gauss4", ops, StepperConfig(tau=-0.1), s0, 1.0)
        with pytest.raises(ConfigError):
            integrate("rk4", ops, StepperConfig(tau=0.1), s0, 1.0)
        with pytest.raises(ConfigError):
            integrate("gauss4", ops, StepperConfig(tau=0.01), s0, 0.1, cadence=0)

    def test_deterministic_repeat(self, setup):
        grid, ops = setup
        s0 = smooth_state(ops, 19)
        cfg = StepperConfig(tau=0.01)
        a = integrate("gauss4", ops, cfg, s0, 0.1)
        b = integrate("gauss4", ops, cfg, s0, 0.1)
        assert np.array_equal(a.state.u, b.state.u)
        assert np.array_equal(a.state.q, b.state.q)
