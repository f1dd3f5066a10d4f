"""Adaptive integration, event detection, and regularized collision passage."""

import math

import numpy as np
import pytest

from lunarbound import kepler as kp
from lunarbound.core import JacobiState, MassParams, energy_split, moment_of_inertia
from lunarbound.integrate import (
    EventSpec,
    IntegrationSingularityError,
    detect_I_crossing,
    detect_syzygy,
    integrate,
    integrate_regularized,
    outer_pericenter_event,
)


def hierarchical_state(a1=0.3, rho=9.0, vr=-0.2, vt=0.15):
    mp = MassParams(1 / 3, 1 / 3, 1 / 3)
    st = JacobiState(
        xi1=[a1, 0, 0],
        dxi1=[0, math.sqrt(mp.mu / a1), 0],
        xi2=[rho, 0, 0],
        dxi2=[vr, vt, 0],
    )
    return mp, st


class TestIntegrate:
    def test_kepler_only_matches_exact_flow(self):
        mp, st = hierarchical_state()
        traj = integrate(st, mp, (0.0, 30.0), kepler_only=True)
        inner = kp.TwoBodyState(xi=st.xi1, dxi=st.dxi1, kappa=mp.mu)
        outer = kp.TwoBodyState(xi=st.xi2, dxi=st.dxi2, kappa=mp.M)
        for t in np.linspace(0.0, 30.0, 13):
            s = traj.state_at(t)
            assert np.abs(s.xi1 - kp.propagate(inner, t).xi).max() < 1e-9
            assert np.abs(s.xi2 - kp.propagate(outer, t).xi).max() < 1e-9

    def test_conservation(self):
        mp, st = hierarchical_state()
        traj = integrate(st, mp, (0.0, 100.0))
        assert np.abs(traj.h_resid).max() < 1e-9
        assert np.abs(traj.j_resid).max() < 1e-9

    def test_time_reversal(self):
        mp, st = hierarchical_state()
        fwd = integrate(st, mp, (0.0, 20.0))
        back = integrate(fwd.state_at(20.0), mp, (0.0, -20.0))
        err = np.abs(back.state_at(-20.0).as_vector() - st.as_vector()).max()
        assert err < 1e-8

    def test_backward_span_first_class(self):
        mp, st = hierarchical_state()
        traj = integrate(st, mp, (0.0, -15.0))
        assert traj.t[0] == 0.0 and traj.t[-1] == -15.0
        assert np.all(np.diff(traj.t) < 0)

    def test_step_budget_flags_incomplete(self):
        mp, st = hierarchical_state()
        traj = integrate(st, mp, (0.0, 1e6), max_steps=50)
        assert not traj.complete
        assert traj.status == "step_budget_exhausted"
        assert traj.n_steps == 50

    def test_singularity_error_carries_state(self):
        # exact binary collision without regularization: steps underflow
        mp, st = two_body_collision_setup()
        with pytest.raises(IntegrationSingularityError) as exc:
            integrate(st, mp, (0.0, 2.5))
        assert exc.value.t == pytest.approx(math.pi / math.sqrt(8.0), abs=1e-6)
        assert exc.value.state.r < 1e-6

    def test_dense_output_continuity(self):
        mp, st = hierarchical_state()
        traj = integrate(st, mp, (0.0, 10.0))
        for i in (1, len(traj.t) // 2, len(traj.t) - 2):
            t = float(traj.t[i])
            left = traj.dense(np.nextafter(t, -np.inf))
            right = traj.dense(np.nextafter(t, np.inf))
            assert np.abs(left - right).max() < 1e-9


class TestEvents:
    def test_i_crossing_detection(self):
        mp, st = hierarchical_state(vr=-0.25)
        traj = integrate(st, mp, (0.0, 60.0))
        I0 = moment_of_inertia(st, mp)
        level = 0.7 * I0
        events = detect_I_crossing(traj, level)
        assert events, "expected at least one crossing"
        for ev in events:
            assert abs(moment_of_inertia(ev.state, mp) - level) <= 1e-10 * level

    def test_i_crossing_none_below(self):
        mp, st = hierarchical_state()
        traj = integrate(st, mp, (0.0, 5.0))
        I0 = moment_of_inertia(st, mp)
        assert detect_I_crossing(traj, 10.0 * I0 + 100.0) == []
        assert moment_of_inertia(st, mp) < 10.0 * I0 + 100.0  # already inside

    def test_i_crossing_alternating_directions(self):
        # oscillating I: eccentric outer orbit crossing a level repeatedly
        mp = MassParams(1 / 3, 1 / 3, 1 / 3)
        a2 = 8.0
        e2 = 0.3
        r_apo = a2 * (1 + e2)
        v_apo = math.sqrt(mp.M * (2 / r_apo - 1 / a2))
        st = JacobiState(
            xi1=[0.3, 0, 0], dxi1=[0, math.sqrt(mp.mu / 0.3), 0],
            xi2=[r_apo, 0, 0], dxi2=[0, v_apo, 0],
        )
        T2 = 2 * math.pi * math.sqrt(a2**3 / mp.M)
        traj = integrate(st, mp, (0.0, 2.2 * T2))
        level = mp.alpha2 * a2**2  # between peri and apo inertia levels
        events = detect_I_crossing(traj, level)
        assert len(events) >= 4 and len(events) % 2 == 0
        dirs = [ev.payload["direction"] for ev in events]
        assert all(a != b for a, b in zip(dirs, dirs[1:]))

    def test_event_times_against_kepler_oracle(self):
        # coupling off: I(t) is exactly computable from two Kepler flows, so
        # every crossing time has an independent oracle
        from scipy.optimize import brentq as _brentq

        mp = MassParams(1 / 3, 1 / 3, 1 / 3)
        a2, e2 = 8.0, 0.3
        r_apo = a2 * (1 + e2)
        v_apo = math.sqrt(mp.M * (2 / r_apo - 1 / a2))
        st = JacobiState(
            xi1=[0.3, 0, 0], dxi1=[0, math.sqrt(mp.mu / 0.3), 0],
            xi2=[r_apo, 0, 0], dxi2=[0, v_apo, 0],
        )
        T2 = 2 * math.pi * math.sqrt(a2**3 / mp.M)
        traj = integrate(st, mp, (0.0, 1.5 * T2), kepler_only=True)
        level = mp.alpha1 * 0.3**2 + mp.alpha2 * a2**2
        found = detect_I_crossing(traj, level)

        outer = kp.TwoBodyState(xi=st.xi2, dxi=st.dxi2, kappa=mp.M)
        rho_target = a2  # inner radius is constant (circular binary)

        def gap(t):
            return kp.propagate(outer, t).r - rho_target

        expected = []
        grid = np.linspace(0.0, 1.5 * T2, 400)
        vals = [gap(t) for t in grid]
        for i in range(len(grid) - 1):
            if vals[i] * vals[i + 1] < 0:
                expected.append(_brentq(gap, grid[i], grid[i + 1], xtol=1e-13))
        assert len(found) == len(expected)
        for ev, t_exp in zip(found, expected):
            assert ev.t == pytest.approx(t_exp, abs=1e-10 * max(1.0, t_exp))

    def test_terminal_event_stops(self):
        mp, st = hierarchical_state(vr=-0.3)
        level = 0.8 * moment_of_inertia(st, mp)
        ev = EventSpec(
            name="entry",
            func=lambda t, s: moment_of_inertia(s, mp) - level,
            direction=-1,
            terminal=True,
        )
        traj = integrate(st, mp, (0.0, 200.0), events=[ev])
        assert traj.status == "event"
        assert traj.events and traj.events[-1].kind == "entry"
        assert abs(moment_of_inertia(traj.events[-1].state, mp) - level) < 1e-9 * level

    def test_outer_pericenter_event(self):
        mp, st = hierarchical_state(vr=-0.2, vt=0.12)
        traj = integrate(st, mp, (0.0, 300.0), events=[outer_pericenter_event()])
        peri = [e for e in traj.events if e.kind == "outer_pericenter"]
        assert peri
        for ev in peri:
            assert abs(float(ev.state.xi2 @ ev.state.dxi2)) < 1e-8


class TestSyzygy:
    def test_collinear_initial_configuration(self):
        # all three on a line (in-plane velocities): syzygy at t = 0
        mp = MassParams(1.0, 1.0, 1.0)
        st = JacobiState(xi1=[1.0, 0, 0], dxi1=[0.0, 0.8, 0], xi2=[3.0, 0, 0], dxi2=[0.0, -0.5, 0])
        traj = integrate(st, mp, (0.0, 0.5))
        events = detect_syzygy(traj)
        assert events is not None and events
        assert events[0].t == pytest.approx(0.0, abs=1e-12)

    def test_fully_collinear_motion(self):
        # degenerate 1-D motion stays applicable and reports the t=0 syzygy
        mp = MassParams(1.0, 1.0, 1.0)
        st = JacobiState(xi1=[1.0, 0, 0], dxi1=[0, 0, 0], xi2=[3.0, 0, 0], dxi2=[0, 0, 0])
        traj = integrate(st, mp, (0.0, 0.05))
        events = detect_syzygy(traj)
        assert events is not None and events
        assert events[0].t == pytest.approx(0.0, abs=1e-12)

    def test_planar_hierarchical_types(self):
        # while the third body is far, only types 1 and 2 occur
        mp, st = hierarchical_state(rho=6.0, vr=0.0, vt=math.sqrt(1.0 / 6.0))
        T2 = 2 * math.pi * math.sqrt(6.0**3 / mp.M)
        traj = integrate(st, mp, (0.0, T2))
        events = detect_syzygy(traj)
        assert events is not None and len(events) >= 4
        types = {ev.payload["middle_mass"] for ev in events}
        assert types <= {1, 2}

    def test_nonplanar_not_applicable(self):
        mp, st = hierarchical_state()
        tilted = JacobiState(
            xi1=st.xi1, dxi1=st.dxi1 + np.array([0, 0, 0.2]),
            xi2=st.xi2, dxi2=st.dxi2,
        )
        traj = integrate(tilted, mp, (0.0, 10.0))
        assert detect_syzygy(traj) is None


def two_body_collision_setup(r0=1.0):
    """Binary falling from rest with a negligible, distant third mass."""
    mp = MassParams(0.5, 0.5, 1e-8)
    st = JacobiState(xi1=[r0, 0, 0], dxi1=[0, 0, 0], xi2=[0, 0, 1e6], dxi2=[0, 0, 0])
    return mp, st


class TestRegularized:
    def test_collision_bounce_conserves_inner_energy(self):
        mp, st = two_body_collision_setup()
        t_col = math.pi / math.sqrt(8.0)
        # end between the bounce and the next apocenter: outbound there
        traj = integrate_regularized(st, mp, (0.0, 1.6 * t_col), kepler_only=True)
        cols = [e for e in traj.events if e.kind == "collision_regularized"]
        assert len(cols) == 1
        assert cols[0].t == pytest.approx(t_col, abs=1e-9)
        _, H1_0, _, _ = energy_split(st, mp)
        end = JacobiState.from_vector(traj.y[-1])
        _, H1_end, _, _ = energy_split(end, mp)
        assert abs(H1_end - H1_0) < 1e-9 * abs(H1_0)
        # emerges outbound along the fall line with reflected velocity
        assert float(end.xi1 @ end.dxi1) > 0

    def test_multiple_passages(self):
        mp, st = two_body_collision_setup()
        t_col = math.pi / math.sqrt(8.0)
        traj = integrate_regularized(st, mp, (0.0, 4 * t_col), kepler_only=True)
        cols = [e for e in traj.events if e.kind == "collision_regularized"]
        assert len(cols) == 2
        assert cols[1].t == pytest.approx(3 * t_col, abs=1e-8)

    def test_no_activation_matches_plain_integrate_bitwise(self):
        mp, st = hierarchical_state()  # binary never below the switch radius
        ev = outer_pericenter_event()
        a = integrate(st, mp, (0.0, 40.0), events=[ev])
        b = integrate_regularized(st, mp, (0.0, 40.0), events=[ev])
        assert np.array_equal(a.t, b.t)
        assert np.array_equal(a.y, b.y)
        assert [e.t for e in a.events] == [e.t for e in b.events]
        assert [e.kind for e in a.events] == [e.kind for e in b.events]

    def test_near_collision_flyby_beats_unregularized(self):
        # pericenter at 1e-6: the regularized path keeps its accuracy budget
        mp = MassParams(0.5, 0.5, 1e-6)
        a1, q = 0.2, 1e-6
        e1 = 1 - q / a1
        r_apo = a1 * (1 + e1)
        v_apo = math.sqrt(mp.mu * (2 / r_apo - 1 / a1))
        st = JacobiState(
            xi1=[r_apo, 0, 0], dxi1=[0, v_apo, 0], xi2=[0, 0, 50.0], dxi2=[0, 0, 0]
        )
        T1 = 2 * math.pi * math.sqrt(a1**3 / mp.mu)
        span = (0.0, 0.6 * T1)  # through one pericenter passage
        reg = integrate_regularized(st, mp, span, max_steps=20000)
        assert reg.complete
        drift_reg = np.abs(reg.h_resid).max()
        assert drift_reg < 1e-8
        unreg = integrate(st, mp, span, max_steps=20000)
        drift_unreg = np.abs(unreg.h_resid).max() if unreg.complete else np.inf
        assert (not unreg.complete) or unreg.n_steps > 2 * reg.n_steps or drift_unreg > drift_reg

    def test_backward_through_collision(self):
        mp, st = two_body_collision_setup()
        t_col = math.pi / math.sqrt(8.0)
        traj = integrate_regularized(st, mp, (0.0, -2.5), kepler_only=True)
        cols = [e for e in traj.events if e.kind == "collision_regularized"]
        assert len(cols) == 1
        assert cols[0].t == pytest.approx(-t_col, abs=1e-9)

    def test_outer_collision_not_regularized(self):
        # exact radial outer fall (coupling off so the collision is exact):
        # rho -> 0 has no regularized path and must error out
        mp = MassParams(1.0, 1.0, 1.0)
        st = JacobiState(xi1=[0.5, 0, 0], dxi1=[0, 2.3, 0], xi2=[0, 1.0, 0], dxi2=[0, -0.5, 0])
        with pytest.raises(IntegrationSingularityError):
            integrate_regularized(st, mp, (0.0, 10.0), kepler_only=True)


class TestTrajectoryExport:
    def test_csv_round_trip(self, tmp_path):
        mp, st = hierarchical_state()
        traj = integrate(st, mp, (0.0, 3.0))
        p = tmp_path / "traj.csv"
        traj.to_csv(p)
        lines = p.read_text().splitlines()
        assert lines[0].startswith("# lunar-bound/1")
        header = lines[1].split(",")
        assert header[:4] == ["t", "xi1x", "xi1y", "xi1z"]
        assert header[-3:] == ["I", "H_resid", "J_resid"]
        data = np.loadtxt(p, delimiter=",", skiprows=2)
        assert data.shape[0] == len(traj.t)
        assert data[0, 0] == traj.t[0]

    def test_events_csv(self, tmp_path):
        mp, st = hierarchical_state(vr=-0.25)
        level = 0.8 * moment_of_inertia(st, mp)
        ev = EventSpec("entry", lambda t, s: moment_of_inertia(s, mp) - level, -1, True)
        traj = integrate(st, mp, (0.0, 100.0), events=[ev])
        p = tmp_path / "events.csv"
        traj.events_to_csv(p)
        lines = p.read_text().splitlines()
        assert lines[0].startswith("# lunar-bound/1")
        assert lines[1] == "t,kind,payload"
        assert any("entry" in ln for ln in lines[2:])
