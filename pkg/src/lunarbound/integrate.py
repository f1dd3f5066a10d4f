"""High-accuracy integration of the coupled system with events.

The stepper is scipy's DOP853 (8th order with embedded error control and a
7th-order dense interpolant), driven manually so that we control the step
budget, event localization and the coordinate switches of the regularized
path.  Backward time is first class: pass t1 < t0.

Events are located by scanning each accepted step's dense interpolant for a
sign change and polishing the root with Brent's method, so event times are
good to ~1e-12 relative.

Collisions of the inner binary can be crossed by switching the short Jacobi
vector to Kustaanheimo-Stiefel variables with the time rescaling dt = r ds
while r is below a switch radius (integrate_regularized); the outer vector
stays in physical coordinates, evolved in the fictitious time alongside.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from .core import JacobiState, MassParams, angular_momentum, energy_split, make_rhs, moment_of_inertia

__all__ = [
    "IntegrationSingularityError",
    "EventSpec",
    "Event",
    "Trajectory",
    "integrate",
    "integrate_regularized",
    "detect_I_crossing",
    "detect_syzygy",
    "i_crossing_event",
    "outer_pericenter_event",
]

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-12
DEFAULT_MAX_STEPS = 500_000

# KS switch radius as a fraction of the binary's natural length beta1/|H|,
# with a x2 hysteresis band so the mode cannot chatter.
KS_SWITCH_FRACTION = 1e-2
KS_EXIT_FACTOR = 2.0
# a passage counts as a collision when the radial minimum dips below this
# fraction of the switch radius
KS_COLLISION_FRACTION = 1e-9


class IntegrationSingularityError(RuntimeError):
    """Step size underflow near an uncontrolled singularity.

    Carries the last valid time and state.
    """

    def __init__(self, message: str, t: float, state: JacobiState):
        super().__init__(message)
        self.t = t
        self.state = state


@dataclass(frozen=True)
class EventSpec:
    """Scalar event g(t, state) with a sign-change direction.

    direction +1 fires on -> +, -1 on + -> -, 0 on both.  Terminal events
    stop the integration at the root.
    """

    name: str
    func: Callable[[float, JacobiState], float]
    direction: int = 0
    terminal: bool = False
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    payload: dict
    state: JacobiState


def i_crossing_event(mp: MassParams, level: float) -> EventSpec:
    """I(t) = level, firing when entering I <= level."""
    return EventSpec(
        name="i_crossing",
        func=lambda t, st: moment_of_inertia(st, mp) - level,
        direction=-1,
        terminal=False,
        payload={"level": level},
    )


def outer_pericenter_event() -> EventSpec:
    """d(rho)/dt changes sign - to +, i.e. xi2 . dxi2 crosses zero upward."""
    return EventSpec(
        name="outer_pericenter",
        func=lambda t, st: float(st.xi2 @ st.dxi2),
        direction=+1,
    )


# ---------------------------------------------------------------------------
# Dense output across segments (physical and regularized)

class _CartSegment:
    """One accepted step of the physical-coordinate solver."""

    __slots__ = ("t_lo", "t_hi", "interp")

    def __init__(self, interp):
        self.interp = interp
        self.t_lo = min(interp.t_min, interp.t_max)
        self.t_hi = max(interp.t_min, interp.t_max)

    def state_vector(self, t: float) -> np.ndarray:
        return self.interp(t)


class _KSSegment:
    """One accepted step of the regularized solver, indexed by physical time.

    The fictitious-time interpolant is inverted through the monotone t(s)
    component when queried at a physical time.
    """

    __slots__ = ("t_lo", "t_hi", "s_lo", "s_hi", "interp")

    def __init__(self, interp, t_lo, t_hi):
        self.interp = interp
        self.s_lo = min(interp.t_min, interp.t_max)
        self.s_hi = max(interp.t_min, interp.t_max)
        self.t_lo = min(t_lo, t_hi)
        self.t_hi = max(t_lo, t_hi)

    def state_vector(self, t: float) -> np.ndarray:
        z = self.interp(self._s_of_t(t))
        return _ks_to_cart_vector(z)

    def _s_of_t(self, t: float) -> float:
        f = lambda s: self.interp(s)[_KS_T] - t
        f_lo = f(self.s_lo)
        f_hi = f(self.s_hi)
        if f_lo == 0.0:
            return self.s_lo
        if f_hi == 0.0:
            return self.s_hi
        if f_lo * f_hi > 0.0:  # clamp when t is at a boundary up to rounding
            return self.s_lo if abs(f_lo) < abs(f_hi) else self.s_hi
        return brentq(f, self.s_lo, self.s_hi, xtol=1e-15, maxiter=200)


class DenseSolution:
    """Piecewise dense output over monotone (increasing or decreasing) time."""

    def __init__(self, segments: Sequence, forward: bool):
        self.segments = list(segments)
        self.forward = forward
        # lookup table sorted ascending in time regardless of travel direction
        self._ordered = sorted(self.segments, key=lambda s: s.t_lo)
        self._starts = [seg.t_lo for seg in self._ordered]

    def __call__(self, t: float) -> np.ndarray:
        if not self._ordered:
            raise ValueError("empty dense solution")
        idx = bisect.bisect_right(self._starts, t) - 1
        idx = min(max(idx, 0), len(self._ordered) - 1)
        seg = self._ordered[idx]
        if t > seg.t_hi and idx + 1 < len(self._ordered):
            seg = self._ordered[idx + 1]
        return seg.state_vector(t)


# ---------------------------------------------------------------------------
# Trajectory

@dataclass
class Trajectory:
    """Dense numerical solution with conserved-quantity residuals and events.

    t is the strictly monotone grid of accepted steps; y holds the flat
    states at those times.  h_resid and j_resid are relative drifts of the
    energy and angular momentum magnitude against their initial values.
    complete is False when a step or time budget cut the run short.
    """

    mp: MassParams
    t: np.ndarray
    y: np.ndarray
    dense: Optional[DenseSolution]
    events: List[Event]
    h_resid: np.ndarray
    j_resid: np.ndarray
    complete: bool
    status: str
    n_steps: int
    h0: float
    j0: float

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def state_at(self, t: float) -> JacobiState:
        if self.dense is None:
            raise ValueError("trajectory stored without dense output")
        return JacobiState.from_vector(self.dense(t))

    def inertia_at(self, t: float) -> float:
        return moment_of_inertia(self.state_at(t), self.mp)

    def inertia_nodes(self) -> np.ndarray:
        a1, a2 = self.mp.alpha1, self.mp.alpha2
        r2 = np.sum(self.y[:, 0:3] ** 2, axis=1)
        p2 = np.sum(self.y[:, 3:6] ** 2, axis=1)
        return a1 * r2 + a2 * p2

    def rho_nodes(self) -> np.ndarray:
        return np.sqrt(np.sum(self.y[:, 3:6] ** 2, axis=1))

    def r_nodes(self) -> np.ndarray:
        return np.sqrt(np.sum(self.y[:, 0:3] ** 2, axis=1))

    def min_inertia(self) -> float:
        return float(self.inertia_nodes().min())

    def to_csv(self, path) -> None:
        """Columns: t, xi1x..z, dxi1x..z, xi2x..z, dxi2x..z, r, rho, I,
        H_resid, J_resid.  Versioned header comment."""
        cols = (
            "t,xi1x,xi1y,xi1z,dxi1x,dxi1y,dxi1z,"
            "xi2x,xi2y,xi2z,dxi2x,dxi2y,dxi2z,r,rho,I,H_resid,J_resid"
        )
        I = self.inertia_nodes()
        r = self.r_nodes()
        rho = self.rho_nodes()
        with open(path, "w") as fh:
            fh.write("# lunar-bound/1 trajectory\n")
            fh.write(cols + "\n")
            for i, ti in enumerate(self.t):
                row = [ti]
                row += list(self.y[i, 0:3]) + list(self.y[i, 6:9])
                row += list(self.y[i, 3:6]) + list(self.y[i, 9:12])
                row += [r[i], rho[i], I[i], self.h_resid[i], self.j_resid[i]]
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    def events_to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# lunar-bound/1 events\n")
            fh.write("t,kind,payload\n")
            for ev in self.events:
                payload = ";".join(f"{k}={v!r}" for k, v in sorted(ev.payload.items()))
                fh.write(f"{format(ev.t, '.17g')},{ev.kind},{payload}\n")


def _residuals(mp: MassParams, y: np.ndarray, h0: float, j0: float):
    n = y.shape[0]
    h = np.empty(n)
    j = np.empty(n)
    for i in range(n):
        st = JacobiState.from_vector(y[i])
        h[i] = energy_split(st, mp)[0]
        J, _, _ = angular_momentum(st, mp)
        j[i] = float(np.linalg.norm(J))
    h_res = (h - h0) / max(abs(h0), 1e-300)
    # absolute drift when the momentum level is zero, relative otherwise
    j_res = (j - j0) / j0 if j0 > 0.0 else (j - j0)
    return h_res, j_res


# ---------------------------------------------------------------------------
# Event localization on one dense segment

def _scan_events(
    specs, ev_vals, t_prev, t_now, seg, to_state, events_out
) -> Optional[float]:
    """Check each event for a sign change across [t_prev, t_now]; return the
    earliest terminal root (in travel order) or None."""
    terminal_root = None
    direction = 1.0 if t_now >= t_prev else -1.0
    for k, spec in enumerate(specs):
        g_prev = ev_vals[k]
        state_now = to_state(seg, t_now)
        g_now = spec.func(t_now, state_now)
        ev_vals[k] = g_now
        if g_prev is None or g_prev == g_now:
            continue
        crossed = (g_prev < 0.0 <= g_now) or (g_prev > 0.0 >= g_now)
        if not crossed:
            continue
        rising = g_prev < g_now
        if spec.direction > 0 and not rising:
            continue
        if spec.direction < 0 and rising:
            continue

        def gfun(t):
            return spec.func(t, to_state(seg, t))

        lo, hi = (t_prev, t_now) if t_prev <= t_now else (t_now, t_prev)
        if gfun(lo) == 0.0:
            root = lo
        elif gfun(hi) == 0.0:
            root = hi
        else:
            root = brentq(gfun, lo, hi, xtol=1e-14, rtol=8.881784197001252e-16, maxiter=200)
        events_out.append(
            Event(t=root, kind=spec.name, payload=dict(spec.payload), state=to_state(seg, root))
        )
        if spec.terminal:
            if terminal_root is None or direction * root < direction * terminal_root:
                terminal_root = root
    return terminal_root


# ---------------------------------------------------------------------------
# Plain integration

def integrate(
    initial: JacobiState,
    mp: MassParams,
    span: Tuple[float, float],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    events: Sequence[EventSpec] = (),
    max_steps: int = DEFAULT_MAX_STEPS,
    kepler_only: bool = False,
    dense: bool = True,
) -> Trajectory:
    """Adaptive integration of the full field over span = (t0, t1).

    t1 < t0 integrates backward.  ``kepler_only`` switches off the coupling
    (test hook).  ``dense=False`` keeps memory flat for long runs: events are
    still localized on the fly, but state_at() becomes unavailable.
    """
    t0, t1 = float(span[0]), float(span[1])
    if t0 == t1:
        raise ValueError("empty time span")
    rhs = make_rhs(mp, kepler_only=kepler_only)
    y0 = initial.as_vector()
    h0, _, _, _ = energy_split(initial, mp)
    J0, _, _ = angular_momentum(initial, mp)
    j0 = float(np.linalg.norm(J0))

    solver = DOP853(rhs, t0, y0, t1, rtol=rtol, atol=atol)
    ts = [t0]
    ys = [y0.copy()]
    segments: List[_CartSegment] = []
    out_events: List[Event] = []
    specs = list(events)
    ev_vals = [spec.func(t0, initial) for spec in specs]
    to_state = lambda seg, t: JacobiState.from_vector(seg.state_vector(t))

    status = "completed"
    complete = True
    n_steps = 0
    while solver.status == "running":
        if n_steps >= max_steps:
            status = "step_budget_exhausted"
            complete = False
            break
        msg = solver.step()
        if solver.status == "failed":
            last = JacobiState.from_vector(ys[-1])
            raise IntegrationSingularityError(
                f"integrator failed: {msg}", t=ts[-1], state=last
            )
        n_steps += 1
        seg = _CartSegment(solver.dense_output())
        t_prev, t_now = ts[-1], solver.t
        term_t = _scan_events(specs, ev_vals, t_prev, t_now, seg, to_state, out_events)
        if term_t is not None:
            ts.append(term_t)
            ys.append(seg.state_vector(term_t))
            segments.append(seg)
            status = "event"
            break
        ts.append(t_now)
        ys.append(solver.y.copy())
        segments.append(seg)

    t_arr = np.array(ts)
    y_arr = np.array(ys)
    h_res, j_res = _residuals(mp, y_arr, h0, j0)
    dense_sol = DenseSolution(segments, forward=t1 > t0) if dense else None
    return Trajectory(
        mp=mp,
        t=t_arr,
        y=y_arr,
        dense=dense_sol,
        events=out_events,
        h_resid=h_res,
        j_resid=j_res,
        complete=complete,
        status=status,
        n_steps=n_steps,
        h0=h0,
        j0=j0,
    )


# ---------------------------------------------------------------------------
# Post-hoc event scans

def detect_I_crossing(traj: Trajectory, level: float) -> List[Event]:
    """All crossings of I(t) = level on the stored trajectory, polished on
    the dense output.  Payload carries the level and crossing direction
    (-1 entering I <= level, +1 leaving)."""
    mp = traj.mp
    vals = traj.inertia_nodes() - level
    out: List[Event] = []
    if traj.dense is None:
        raise ValueError("dense output required for crossing detection")

    def g(t):
        return traj.inertia_at(t) - level

    for i in range(len(traj.t) - 1):
        a, b = vals[i], vals[i + 1]
        if (a < 0.0 <= b) or (a > 0.0 >= b):
            lo, hi = sorted((float(traj.t[i]), float(traj.t[i + 1])))
            root = brentq(g, lo, hi, xtol=1e-14, rtol=8.881784197001252e-16)
            direction = -1 if a > 0.0 else +1
            out.append(
                Event(
                    t=root,
                    kind="i_crossing",
                    payload={"level": level, "direction": direction},
                    state=traj.state_at(root),
                )
            )
    return out


def detect_syzygy(traj: Trajectory, plane_tol: float = 1e-10) -> Optional[List[Event]]:
    """Collinearity events of a planar trajectory, typed by the middle mass.

    Returns None (not applicable) when the motion is not planar to
    plane_tol: collinear instants have codimension two in space, so scanning
    for them only makes sense in the plane.
    """
    mp = traj.mp
    y = traj.y
    # common plane normal: least-singular direction of all position and
    # velocity vectors (robust even for collinear or 1-D motion)
    take = np.linspace(0, len(y) - 1, min(len(y), 64)).astype(int)
    rows = np.concatenate([y[take, 0:3], y[take, 3:6], y[take, 6:9], y[take, 9:12]])
    norms = np.linalg.norm(rows, axis=1)
    rows_n = rows[norms > 0] / norms[norms > 0, None]
    if rows_n.shape[0] == 0:
        return None
    _, _, vt = np.linalg.svd(rows_n, full_matrices=True)
    n_hat = vt[-1]
    scale = max(np.abs(y[:, 0:6]).max(), 1e-300)
    for i in range(len(y)):
        for block in (0, 3, 6, 9):
            if abs(float(y[i, block:block + 3] @ n_hat)) > plane_tol * scale:
                return None

    def syz(t, st: JacobiState) -> float:
        # collinear iff the two relative position vectors are parallel
        return float(np.cross(st.xi1, st.xi2) @ n_hat)

    def middle_mass(st: JacobiState) -> int:
        from .core import from_jacobi

        cart = from_jacobi(st, mp)
        qs = [cart.q1, cart.q2, cart.q3]
        d = st.xi1 / max(np.linalg.norm(st.xi1), 1e-300)
        params = sorted(range(3), key=lambda i: float(qs[i] @ d))
        return params[1] + 1

    out: List[Event] = []
    vals = [syz(float(traj.t[i]), JacobiState.from_vector(y[i])) for i in range(len(y))]
    if abs(vals[0]) == 0.0:
        st0 = JacobiState.from_vector(y[0])
        out.append(
            Event(
                t=float(traj.t[0]),
                kind="syzygy",
                payload={"middle_mass": middle_mass(st0)},
                state=st0,
            )
        )

    def g(t):
        return syz(t, traj.state_at(t))

    for i in range(len(y) - 1):
        a, b = vals[i], vals[i + 1]
        if (a < 0.0 <= b) or (a > 0.0 >= b):
            lo, hi = sorted((float(traj.t[i]), float(traj.t[i + 1])))
            root = brentq(g, lo, hi, xtol=1e-14, rtol=8.881784197001252e-16)
            st = traj.state_at(root)
            out.append(
                Event(
                    t=root,
                    kind="syzygy",
                    payload={"middle_mass": middle_mass(st)},
                    state=st,
                )
            )
    return out


# ---------------------------------------------------------------------------
# Kustaanheimo-Stiefel regularized integration

# KS state layout: [u(4), u'(4), h1, t, xi2(3), v2(3)] -> 16 components
_KS_T = 9


def _ks_matrix(u: np.ndarray) -> np.ndarray:
    u1, u2, u3, u4 = u
    return np.array(
        [
            [u1, -u2, -u3, u4],
            [u2, u1, -u4, -u3],
            [u3, u4, u1, u2],
        ]
    )


def _ks_from_cart(xi1: np.ndarray, dxi1: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x, y, z = xi1
    r = float(np.linalg.norm(xi1))
    u = np.empty(4)
    if x >= 0.0:
        u[0] = math.sqrt(0.5 * (r + x))
        u[3] = 0.0
        u[1] = 0.5 * y / u[0]
        u[2] = 0.5 * z / u[0]
    else:
        u[1] = math.sqrt(0.5 * (r - x))
        u[2] = 0.0
        u[0] = 0.5 * y / u[1]
        u[3] = 0.5 * z / u[1]
    up = 0.5 * (_ks_matrix(u).T @ dxi1)
    return u, up


def _ks_to_cart_vector(z: np.ndarray) -> np.ndarray:
    """Map the 16-dim KS state to the flat 12-dim Jacobi vector."""
    u = z[0:4]
    up = z[4:8]
    r = float(u @ u)
    L = _ks_matrix(u)
    xi1 = L @ u
    dxi1 = (2.0 / r) * (L @ up) if r > 0.0 else np.zeros(3)
    return np.concatenate([xi1, z[10:13], dxi1, z[13:16]])


def _make_ks_rhs(mp: MassParams, kepler_only: bool, direction: float):
    """Fictitious-time field: d/ds = direction * r * d/dt plus the oscillator
    form of the inner equation.  Regular at r = 0."""
    rhs_cart = make_rhs(mp, kepler_only=kepler_only)
    mu = mp.mu
    a1 = mp.alpha1
    M = mp.M
    a2 = mp.alpha2
    m13 = mp.m1 * mp.m3
    m23 = mp.m2 * mp.m3
    mu1, mu2 = mp.mu1, mp.mu2
    beta2 = mp.beta2

    def rhs(s, z):
        u = z[0:4]
        up = z[4:8]
        h1 = z[8]
        xi2 = z[10:13]
        v2 = z[13:16]
        r = float(u @ u)
        L = _ks_matrix(u)
        xi1 = L @ u
        rho2 = float(xi2 @ xi2)
        rho3 = rho2 * math.sqrt(rho2)
        acc2 = -M / rho3 * xi2
        if kepler_only:
            P = np.zeros(3)
        else:
            uvec = xi2 + mu2 * xi1
            wvec = xi2 - mu1 * xi1
            nu2 = float(uvec @ uvec)
            nw2 = float(wvec @ wvec)
            cu = m13 / (nu2 * math.sqrt(nu2))
            cw = m23 / (nw2 * math.sqrt(nw2))
            g1 = mu2 * cu * uvec - mu1 * cw * wvec
            g2 = cu * uvec + cw * wvec - beta2 / rho3 * xi2
            P = -g1 / a1
            acc2 = acc2 - g2 / a2
        Lup = L @ up
        dz = np.empty(16)
        dz[0:4] = direction * up
        dz[4:8] = direction * (0.5 * h1 * u + 0.5 * r * (L.T @ P))
        dz[8] = direction * 2.0 * float(Lup @ P)
        dz[9] = direction * r
        dz[10:13] = direction * r * v2
        dz[13:16] = direction * r * acc2
        return dz

    return rhs


@dataclass
class _KSPhaseResult:
    ts: list
    ys: list
    segments: list
    events: list
    n_steps: int
    status: str          # "completed" | "event" | "step_budget_exhausted" | "switch"
    next_mode: str       # "cart" | "ks" (meaningful when status == "switch")
    exit_state: Optional[JacobiState]
    exit_t: Optional[float]


def integrate_regularized(
    initial: JacobiState,
    mp: MassParams,
    span: Tuple[float, float],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    events: Sequence[EventSpec] = (),
    max_steps: int = DEFAULT_MAX_STEPS,
    kepler_only: bool = False,
    dense: bool = True,
    r_switch: Optional[float] = None,
) -> Trajectory:
    """Like integrate(), but passes through inner-binary collisions.

    While r > r_switch this takes the exact same steps as integrate() (the
    switch guard is a passive extra event), so non-collisional runs produce
    bitwise identical trajectories.  Below the switch radius the inner
    vector evolves in KS variables with dt = r ds; each passage whose radial
    minimum is consistent with r = 0 is logged as a collision_regularized
    event carrying the duration of the regularized stint.  Outer collisions
    (rho -> 0) are not regularized and still raise.
    """
    t0, t1 = float(span[0]), float(span[1])
    if t0 == t1:
        raise ValueError("empty time span")
    forward = t1 > t0
    direction = 1.0 if forward else -1.0
    if r_switch is None:
        H, _, _, _ = energy_split(initial, mp)
        r_switch = KS_SWITCH_FRACTION * mp.beta1 / abs(H)
    r_exit = KS_EXIT_FACTOR * r_switch

    rhs = make_rhs(mp, kepler_only=kepler_only)
    h0, _, _, _ = energy_split(initial, mp)
    J0, _, _ = angular_momentum(initial, mp)
    j0 = float(np.linalg.norm(J0))

    specs = list(events)
    ts = [t0]
    ys = [initial.as_vector().copy()]
    segments: list = []
    out_events: List[Event] = []
    n_steps = 0
    status = "completed"
    complete = True
    state = initial
    t_now = t0
    mode = "cart" if state.r >= r_switch else "ks"

    while True:
        if n_steps >= max_steps:
            status = "step_budget_exhausted"
            complete = False
            break
        if mode == "cart":
            res = _run_cart_phase(
                rhs, mp, state, t_now, t1, rtol, atol, specs, max_steps - n_steps,
                r_switch, forward,
            )
        else:
            res = _run_ks_phase(
                mp, state, t_now, t1, rtol, atol, specs, max_steps - n_steps,
                r_exit, r_switch, kepler_only, direction,
            )
        ts.extend(res.ts)
        ys.extend(res.ys)
        segments.extend(res.segments)
        out_events.extend(res.events)
        n_steps += res.n_steps
        if res.status == "switch":
            state = res.exit_state
            t_now = res.exit_t
            mode = res.next_mode
            continue
        status = res.status
        complete = status in ("completed", "event")
        break

    t_arr = np.array(ts)
    y_arr = np.array(ys)
    h_res, j_res = _residuals(mp, y_arr, h0, j0)
    dense_sol = DenseSolution(segments, forward=forward) if dense else None
    return Trajectory(
        mp=mp,
        t=t_arr,
        y=y_arr,
        dense=dense_sol,
        events=out_events,
        h_resid=h_res,
        j_resid=j_res,
        complete=complete,
        status=status,
        n_steps=n_steps,
        h0=h0,
        j0=j0,
    )


def _run_cart_phase(rhs, mp, state, t_start, t1, rtol, atol, specs, budget,
                    r_switch, forward):
    """Physical-coordinate phase with a terminal guard at r = r_switch."""
    solver = DOP853(rhs, t_start, state.as_vector(), t1, rtol=rtol, atol=atol)
    to_state = lambda seg, t: JacobiState.from_vector(seg.state_vector(t))
    sgn = 1.0 if forward else -1.0
    guard = EventSpec(
        name="_ks_enter",
        func=lambda t, st: st.r - r_switch,
        direction=-1,
        terminal=True,
    )
    all_specs = specs + [guard]
    ev_vals = [sp.func(t_start, state) for sp in all_specs]
    ts, ys, segments, events = [], [], [], []
    n_steps = 0
    while solver.status == "running":
        if n_steps >= budget:
            return _KSPhaseResult(ts, ys, segments, events, n_steps,
                                  "step_budget_exhausted", "cart", None, None)
        msg = solver.step()
        if solver.status == "failed":
            last = JacobiState.from_vector(ys[-1] if ys else state.as_vector())
            raise IntegrationSingularityError(
                f"integrator failed: {msg}", t=ts[-1] if ts else t_start, state=last
            )
        n_steps += 1
        seg = _CartSegment(solver.dense_output())
        t_prev = ts[-1] if ts else t_start
        local_events: List[Event] = []
        term_t = _scan_events(all_specs, ev_vals, t_prev, solver.t, seg, to_state, local_events)
        switch_t = None
        user_events = []
        for ev in local_events:
            if ev.kind == "_ks_enter":
                if switch_t is None or sgn * ev.t < sgn * switch_t:
                    switch_t = ev.t
            else:
                user_events.append(ev)
        stop_t = None
        stop_kind = None
        if switch_t is not None:
            stop_t, stop_kind = switch_t, "switch"
        if term_t is not None and term_t != switch_t:
            if stop_t is None or sgn * term_t < sgn * stop_t:
                stop_t, stop_kind = term_t, "event"
        if stop_t is not None:
            events.extend(ev for ev in user_events if sgn * ev.t <= sgn * stop_t)
            ts.append(stop_t)
            ys.append(seg.state_vector(stop_t))
            segments.append(seg)
            if stop_kind == "switch":
                return _KSPhaseResult(
                    ts, ys, segments, events, n_steps, "switch", "ks",
                    JacobiState.from_vector(seg.state_vector(stop_t)), stop_t,
                )
            return _KSPhaseResult(ts, ys, segments, events, n_steps, "event",
                                  "cart", None, None)
        events.extend(user_events)
        ts.append(solver.t)
        ys.append(solver.y.copy())
        segments.append(seg)
    return _KSPhaseResult(ts, ys, segments, events, n_steps, "completed",
                          "cart", None, None)


def _run_ks_phase(mp, state, t_start, t1, rtol, atol, specs, budget,
                  r_exit, r_switch, kepler_only, direction):
    """Regularized phase: integrate in fictitious time until r climbs back
    through r_exit, the physical time bound is hit, or budgets run out."""
    u, up = _ks_from_cart(state.xi1, state.dxi1)
    h1 = 0.5 * float(state.dxi1 @ state.dxi1) - mp.mu / state.r
    z0 = np.concatenate([u, up, [h1, t_start], state.xi2, state.dxi2])
    rhs = _make_ks_rhs(mp, kepler_only, direction)
    # fictitious-time horizon: ds ~ dt/r, be generous and let events stop us
    s_max = abs(t1 - t_start) / max(r_switch * 1e-6, 1e-12) + 10.0
    solver = DOP853(rhs, 0.0, z0, s_max, rtol=rtol, atol=atol)

    def to_state(seg, t):
        return JacobiState.from_vector(seg.state_vector(t))

    ts, ys, segments, events = [], [], [], []
    ev_vals = [sp.func(t_start, state) for sp in specs]
    sgn = direction
    stint_t0 = t_start
    collision_roots = []  # physical times of radial minima at ~zero radius
    n_steps = 0
    prev_z = z0
    prev_s = 0.0
    while solver.status == "running":
        if n_steps >= budget:
            _log_collisions(events, collision_roots, stint_t0, prev_z[_KS_T])
            return _KSPhaseResult(ts, ys, segments, events, n_steps,
                                  "step_budget_exhausted", "ks", None, None)
        msg = solver.step()
        if solver.status == "failed":
            last = JacobiState.from_vector(_ks_to_cart_vector(prev_z))
            raise IntegrationSingularityError(
                f"regularized integrator failed: {msg}", t=prev_z[_KS_T], state=last
            )
        n_steps += 1
        interp = solver.dense_output()
        t_prev = prev_z[_KS_T]
        t_now = solver.y[_KS_T]
        seg = _KSSegment(interp, t_prev, t_now)

        # radial minima: dr/d(travel) crossing - -> +, i.e. direction * u.u'
        # changing sign upward; collision when r at the minimum is ~ 0
        f_prev = direction * float(prev_z[0:4] @ prev_z[4:8])
        f_now = direction * float(solver.y[0:4] @ solver.y[4:8])
        if f_prev < 0.0 <= f_now:
            sfun = lambda s: direction * float(interp(s)[0:4] @ interp(s)[4:8])
            s_root = brentq(sfun, prev_s, solver.t, xtol=1e-15, maxiter=200)
            z_root = interp(s_root)
            r_here = float(z_root[0:4] @ z_root[0:4])
            if r_here <= KS_COLLISION_FRACTION * r_switch:
                st_col = JacobiState.from_vector(_ks_to_cart_vector(z_root))
                collision_roots.append((float(z_root[_KS_T]), st_col))

        local_events: List[Event] = []
        term_t = _scan_events(specs, ev_vals, t_prev, t_now, seg, to_state, local_events)

        # physical time bound
        passed_bound = (direction > 0 and t_now >= t1) or (direction < 0 and t_now <= t1)
        exit_r = float(solver.y[0:4] @ solver.y[0:4])
        if term_t is not None:
            events.extend(ev for ev in local_events if sgn * ev.t <= sgn * term_t)
            ts.append(term_t)
            ys.append(seg.state_vector(term_t))
            segments.append(seg)
            _log_collisions(events, collision_roots, stint_t0, term_t)
            return _KSPhaseResult(ts, ys, segments, events, n_steps, "event",
                                  "ks", None, None)
        if passed_bound:
            events.extend(ev for ev in local_events if sgn * ev.t <= sgn * t1)
            ts.append(t1)
            ys.append(seg.state_vector(t1))
            segments.append(seg)
            _log_collisions(events, collision_roots, stint_t0, t1)
            return _KSPhaseResult(ts, ys, segments, events, n_steps, "completed",
                                  "ks", None, None)
        events.extend(local_events)
        ts.append(t_now)
        ys.append(_ks_to_cart_vector(solver.y))
        segments.append(seg)
        if exit_r >= r_exit:
            _log_collisions(events, collision_roots, stint_t0, t_now)
            return _KSPhaseResult(
                ts, ys, segments, events, n_steps, "switch", "cart",
                JacobiState.from_vector(_ks_to_cart_vector(solver.y)), t_now,
            )
        prev_z = solver.y.copy()
        prev_s = solver.t
    return _KSPhaseResult(ts, ys, segments, events, n_steps, "completed",
                          "ks", None, None)


def _log_collisions(events, roots, t_enter, t_exit):
    duration = abs(t_exit - t_enter)
    for t_col, st_col in roots:
        events.append(
            Event(
                t=t_col,
                kind="collision_regularized",
                payload={"duration": duration},
                state=st_col,
            )
        )
    roots.clear()
