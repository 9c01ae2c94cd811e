import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinchaos import (HBAR, DomainError, FieldSample, LoopGeometry,
                       ModelParams, SpinState, TrajectorySpec,
                       euler_cromer_step, forward_euler_step,
                       integrate_pendulum, pendulum_rhs, qm_timescale, rhs,
                       simulate_trajectory, spin_torque, trajectory_path)
from spinchaos._kernels import integrate_const_field
from spinchaos.dynamics import oscillation_energy

MU_B = 9.274e-24
PI = math.pi


class TestSpinTorque:
    @pytest.mark.parametrize("theta", [0.0, PI / 2, PI])
    def test_exact_zeros(self, theta):
        assert spin_torque(theta, FieldSample(0.3, -1.7), 2.0) == 0.0

    def test_aligned_quarter(self):
        # pure Bz > 0 at theta = pi/4: torque is -mu*B toward the pole
        assert spin_torque(PI / 4, FieldSample(0.0, 1.0), MU_B) == \
            pytest.approx(-MU_B, rel=1e-12)

    def test_anti_aligned_quarter(self):
        assert spin_torque(3 * PI / 4, FieldSample(0.0, 1.0), MU_B) == \
            pytest.approx(MU_B, rel=1e-12)

    def test_continuity_at_branch_join(self):
        fld = FieldSample(0.8, -0.4)
        eps = 1e-7
        left = spin_torque(PI / 2 - eps, fld, 1.0)
        right = spin_torque(PI / 2 + eps, fld, 1.0)
        assert abs(left) < 1e-12
        assert abs(right) < 1e-12

    def test_sign_pattern_under_bz(self):
        # both poles attract, pi/2 repels
        fld = FieldSample(0.0, 1.0)
        thetas = np.linspace(1e-4, PI - 1e-4, 999)
        taus = np.array([spin_torque(t, fld, 1.0) for t in thetas])
        below = thetas < PI / 2
        above = thetas > PI / 2
        assert (taus[below] < 0.0).all()
        assert (taus[above] > 0.0).all()

    def test_sign_pattern_under_bx(self):
        # pi/2 attracts from both sides
        fld = FieldSample(1.0, 0.0)
        thetas = np.linspace(1e-4, PI - 1e-4, 999)
        taus = np.array([spin_torque(t, fld, 1.0) for t in thetas])
        assert (taus[thetas < PI / 2] > 0.0).all()
        assert (taus[thetas > PI / 2] < 0.0).all()

    @pytest.mark.parametrize("theta", [-0.1, PI + 0.1])
    def test_domain(self, theta):
        with pytest.raises(DomainError):
            spin_torque(theta, FieldSample(0.0, 1.0), 1.0)

    @given(theta=st.floats(1e-6, PI - 1e-6),
           bx=st.floats(-2.0, 2.0), bz=st.floats(-2.0, 2.0))
    @settings(max_examples=200, deadline=None)
    def test_mirror_antisymmetry(self, theta, bx, bz):
        # tau(pi - theta) = -tau(theta): the dynamics is equivariant under
        # (theta, y) -> (pi - theta, -y), matching the reference curve's
        # symmetry about (pi/2, 1/2)
        fld = FieldSample(bx, bz)
        assert spin_torque(PI - theta, fld, 1.0) == \
            pytest.approx(-spin_torque(theta, fld, 1.0), abs=1e-12)


def _toy_params(inertia=2.0, damping=0.5, dt=1e-3, current=1.0):
    # weak far-field loop so rhs field terms are negligible against damping
    loop = LoopGeometry(radius=0.01, current=current,
                        center_x=0.0, center_z=-10.0)
    traj = TrajectorySpec(x_start=-1.0, x_end=1.0, z0=0.0, v=1.0)
    return ModelParams(mu=1e-30, inertia=inertia, damping=damping, dt=dt,
                       loop=loop, traj=traj, b_ref=1.0)


class TestRhs:
    def test_rest_is_stationary(self):
        p = _toy_params()
        dth, dy = rhs(SpinState(0.0, 0.0, 0.1), p)
        assert dth == 0.0
        assert dy == 0.0

    def test_pure_damping(self):
        p = _toy_params(inertia=4.0, damping=2.0)
        dth, dy = rhs(SpinState(0.7, 1.0, 0.1), p)
        assert dth == 1.0
        assert dy == pytest.approx(-0.5, rel=1e-9)

    def test_quarter_angle_acceleration(self, params):
        # on the loop axis Bx = 0 exactly and Bz > 0; at theta = pi/4 the
        # angular acceleration is -mu Bz / I
        t_axis = (0.0 - params.traj.x_start) / params.traj.v
        from spinchaos import field_along_trajectory

        fld = field_along_trajectory(params.traj, params.loop, t_axis)
        assert fld.bx == 0.0
        dth, dy = rhs(SpinState(PI / 4, 0.0, t_axis), params)
        assert dth == 0.0
        assert dy == pytest.approx(-params.mu * fld.bz / params.inertia,
                                   rel=1e-12)


class TestEulerCromerStep:
    def test_fixed_point(self):
        p = _toy_params()
        s0 = SpinState(0.0, 0.0, 0.0)
        s1 = euler_cromer_step(s0, p)
        assert s1.theta == 0.0 and s1.y == 0.0
        assert s1.t == pytest.approx(p.dt)

    def test_velocity_first_order(self):
        # y' = a dt, theta' = theta0 + a dt^2 after one step from rest
        p = _toy_params(damping=0.0)
        s0 = SpinState(0.4, 0.0, 0.0)
        _, a = rhs(s0, p)
        s1 = euler_cromer_step(s0, p)
        assert s1.y == pytest.approx(a * p.dt, rel=1e-12)
        assert s1.theta == pytest.approx(0.4 + a * p.dt * p.dt, rel=1e-12)

    def test_pole_reflection(self):
        p = _toy_params(damping=0.0, dt=1e-2)
        s0 = SpinState(1e-4, -0.1, 0.0)  # will cross theta = 0
        s1 = euler_cromer_step(s0, p)
        assert 0.0 <= s1.theta <= PI
        assert s1.y > 0.0

    def test_matches_kernel_path(self, params):
        from spinchaos._kernels import field_table

        n = 200
        bx, bz = field_table(params.traj.x_start, params.traj.v, params.dt, n,
                             params.traj.z0, params.loop.radius,
                             params.loop.current, params.loop.center_x,
                             params.loop.center_z)
        from spinchaos._kernels import integrate_path

        thetas, ys, thf, yf = integrate_path(1.0, bx, bz, params.dt,
                                             params.mu, params.inertia,
                                             params.damping, 1)
        state = SpinState(1.0, 0.0, 0.0)
        for k in range(n):
            assert state.theta == pytest.approx(thetas[k], rel=1e-9, abs=1e-12)
            state = euler_cromer_step(state, params)
        assert state.theta == pytest.approx(thf, rel=1e-9)


class TestIntegratorEnergy:
    MU, BZ, INERTIA = 1.0, 1.0, 1.0
    THETA0 = 0.3

    def _run(self, velocity_first, n_steps=1_000_000, dt=2e-3):
        thetas, ys, thf, yf = integrate_const_field(
            self.THETA0, 0.0, 0.0, self.BZ, dt, self.MU, self.INERTIA, 0.0,
            n_steps, record_every=100, velocity_first=velocity_first)
        return oscillation_energy(thetas, ys, self.MU, self.BZ, self.INERTIA)

    def test_velocity_first_energy_bounded(self):
        e = self._run(velocity_first=True)
        e0 = oscillation_energy(self.THETA0, 0.0, self.MU, self.BZ, self.INERTIA)
        drift = (e.max() - e.min()) / e0
        assert drift < 0.01

    def test_forward_euler_energy_grows(self):
        # measured growth factor 2.76 over 2e5 steps at this dt
        e = self._run(velocity_first=False, n_steps=200_000)
        checkpoints = e[::20]
        assert (np.diff(checkpoints) > 0.0).all()
        assert e[-1] > 2.0 * e[0]


class TestQmTimescale:
    def test_bohr_magneton_one_tesla(self):
        # dE = 2 mu B = 1.8548e-23 J; hbar/(2 dE) = 2.843e-12 s
        tau = qm_timescale(MU_B, 1.0)
        assert tau == pytest.approx(2.843e-12, rel=1e-3)
        assert tau == pytest.approx(HBAR / (4.0 * MU_B), rel=1e-15)

    def test_inverse_in_field(self):
        assert qm_timescale(MU_B, 2.0) == pytest.approx(
            qm_timescale(MU_B, 1.0) / 2.0, rel=1e-12)

    @pytest.mark.parametrize("mu,b", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
    def test_domain(self, mu, b):
        with pytest.raises(DomainError):
            qm_timescale(mu, b)


class TestSimulateTrajectory:
    def test_zero_angle_stays_up(self, params):
        out = simulate_trajectory(0.0, params)
        assert out.down_indicator == 0
        assert out.final_theta == 0.0
        assert out.final_y == 0.0
        assert not out.unsettled

    def test_near_pi_settles_down(self, params):
        out = simulate_trajectory(1000 * PI / 1001, params)
        assert out.down_indicator == 1
        assert out.final_theta > PI / 2

    def test_deterministic(self, params):
        a = simulate_trajectory(0.9, params)
        b = simulate_trajectory(0.9, params)
        assert a == b

    def test_adjacent_angles_can_flip(self, params):
        # chaos signature: somewhere on the grid neighbours part ways
        grid = np.arange(101) * (PI / 101)
        downs = [simulate_trajectory(t, params).down_indicator
                 for t in grid[40:61]]
        assert any(a != b for a, b in zip(downs, downs[1:]))

    def test_branch_point_rejected(self, params):
        with pytest.raises(DomainError):
            simulate_trajectory(PI / 2, params)

    def test_out_of_range_rejected(self, params):
        with pytest.raises(DomainError):
            simulate_trajectory(-0.01, params)

    def test_path_dump(self, params):
        t, theta, y, bx, bz = trajectory_path(0.9, params, stride=1000)
        assert len(t) == len(theta) == len(y) == len(bx) == len(bz)
        assert t[0] == 0.0
        assert theta[0] == 0.9
        assert (np.diff(t) > 0).all()
        assert np.isfinite(theta).all()


class TestPendulum:
    def test_rhs_form(self):
        dth, dy = pendulum_rhs(0.3, 0.7, 0.0, 0.5, 9.0, 0.0, math.cos)
        assert dth == 0.7
        assert dy == pytest.approx(-0.5 * 0.7 - 9.0 * math.sin(0.3))

    def test_small_angle_frequency(self):
        # c' = 0, small theta: damped harmonic motion at sqrt(b')
        b_grav = 9.0
        ts, thetas, _ = integrate_pendulum(0.01, 0.0, 1e-4, 200_000,
                                           0.0, b_grav, 0.0, math.cos)
        crossings = np.where(np.diff(np.sign(thetas)))[0]
        period = 2.0 * np.mean(np.diff(ts[crossings]))
        assert period == pytest.approx(2 * PI / math.sqrt(b_grav), rel=1e-3)

    def test_subcritical_drive_periodic(self):
        # c'F/b' < 1: the long-run orbit locks to the drive period
        omega_d = 2 * PI
        omega0 = 1.5 * omega_d
        a, b, c = omega0 / 2, omega0 ** 2, 0.3 * omega0 ** 2
        drive = lambda t: math.cos(omega_d * t)  # noqa: E731
        dt = 1e-4
        steps_per_period = int(round(1.0 / dt))
        ts, thetas, ys = integrate_pendulum(0.2, 0.0, dt,
                                            60 * steps_per_period, a, b, c,
                                            drive, record_every=steps_per_period)
        tail = thetas[-10:]
        assert np.ptp(tail) < 1e-4

    def test_supercritical_drive_diverges(self):
        omega_d = 2 * PI
        omega0 = 1.5 * omega_d
        a, b, c = omega0 / 4, omega0 ** 2, 1.5 * omega0 ** 2
        drive = lambda t: math.cos(omega_d * t)  # noqa: E731
        dt = 1e-4
        n = 400_000
        _, th1, _ = integrate_pendulum(0.2, 0.0, dt, n, a, b, c, drive,
                                       record_every=100)
        _, th2, _ = integrate_pendulum(0.2 + 1e-4, 0.0, dt, n, a, b, c,
                                       drive, record_every=100)
        assert np.max(np.abs(th1 - th2)) > PI
