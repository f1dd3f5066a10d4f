"""The explicit constant chain.

Starting from masses, an energy level H < 0 and an angular momentum level J,
this module derives, in order: the splitting threshold I* above which the
far-body regions separate, the region bounds (c_r, c_J2, c_g, c_g2), the
osculating-pericenter threshold I**, the deviation constants (A, a, b, A1,
B1, R_bar), the strip constants (R, R_bar_lambda, lambda', R_lambda), the
final threshold I0, and the comparison constants (phi, delta, rho_M, I_M)
of Marchal's monotonicity method.

Every constant has an elementary derivation recorded in its docstring; the
weakest links (the region bounds, which the literature usually leaves
implicit) are validated by large sampling sweeps in the test suite.

The chain is deterministic: identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .core import MassParams

__all__ = [
    "NoSplittingError",
    "EulerConfig",
    "euler_configuration",
    "euler_potential_saddle",
    "i_star",
    "RegionConstants",
    "region_constants",
    "i_star_star",
    "DeviationConstants",
    "deviation_constants",
    "StripConstants",
    "strip_and_main",
    "MarchalComparison",
    "marchal_comparison",
    "BoundSet",
    "compute_chain",
    "i0",
]

DEFAULT_SIGMA = 0.5

# Reference values quoted for comparison in reports; annotations only, the
# sharper analyses behind them are not reproduced here.
MARCHAL_EQUAL_MASS_I_M = (1.0 / 3.0) * 2.709629**2
HENON_BROUCKE_MIN_I = 2.402035


class NoSplittingError(ValueError):
    """At these (H, J) levels no threshold separates the far-body regions."""


# ---------------------------------------------------------------------------
# Collinear central configuration

@dataclass(frozen=True)
class EulerConfig:
    """Collinear central configuration normalized to I = 1.

    positions are the signed coordinates of the three bodies along the line
    (center of mass at the origin), middle is the index (1-based) of the mass
    between the other two, u_hat the potential value at the configuration,
    and residual the normalized defect of the central-configuration equation.
    """

    middle: int
    positions: np.ndarray
    u_hat: float
    residual: float


def _euler_quintic_root(mA: float, mB: float, mC: float) -> float:
    """Positive root x of the collinear central configuration quintic for
    masses (mA, mB, mC) in line order, x = BC/AB."""

    def p(x):
        return (
            (mA + mB) * x**5
            + (3 * mA + 2 * mB) * x**4
            + (3 * mA + mB) * x**3
            - (mB + 3 * mC) * x**2
            - (2 * mB + 3 * mC) * x
            - (mB + mC)
        )

    hi = 1.0
    for _ in range(200):
        if p(hi) > 0.0:
            break
        hi *= 2.0
    return brentq(p, 1e-12, hi, xtol=1e-15, rtol=8.881784197001252e-16, maxiter=200)


def euler_configuration(mp: MassParams, middle: int) -> EulerConfig:
    """Collinear central configuration with the given mass in the middle.

    The quintic has a unique positive root, so the root-finder cannot
    honestly fail; the residual field lets the caller confirm that.
    """
    if middle not in (1, 2, 3):
        raise ValueError("middle must be 1, 2 or 3")
    masses = mp.masses()
    outer = [i for i in range(3) if i != middle - 1]
    order = [outer[0], middle - 1, outer[1]]
    mA, mB, mC = (masses[i] for i in order)
    x = _euler_quintic_root(mA, mB, mC)

    line = np.array([0.0, 1.0, 1.0 + x])
    m_ord = np.array([mA, mB, mC])
    com = float(m_ord @ line) / m_ord.sum()
    p_ord = line - com
    i_raw = float(m_ord @ p_ord**2)
    scale = 1.0 / math.sqrt(i_raw)
    p_ord = p_ord * scale

    r_ab = abs(p_ord[1] - p_ord[0])
    r_bc = abs(p_ord[2] - p_ord[1])
    r_ac = abs(p_ord[2] - p_ord[0])
    u_hat = mA * mB / r_ab + mB * mC / r_bc + mA * mC / r_ac

    # central configuration defect: f_i + (U/I) p_i = 0 with I = 1
    f = np.zeros(3)
    for i in range(3):
        for j in range(3):
            if i != j:
                dij = p_ord[j] - p_ord[i]
                f[i] += m_ord[j] * dij / abs(dij) ** 3
    defect = f + u_hat * p_ord
    residual = float(np.max(np.abs(defect)) / np.max(np.abs(f)))

    positions = np.empty(3)
    for slot, body in enumerate(order):
        positions[body] = p_ord[slot]
    return EulerConfig(middle=middle, positions=positions, u_hat=u_hat, residual=residual)


def euler_potential_saddle(mp: MassParams) -> float:
    """Largest potential value over the three collinear central
    configurations on I = 1 (the binding bottleneck for the splitting)."""
    return max(euler_configuration(mp, k).u_hat for k in (1, 2, 3))


def i_star(mp: MassParams, H: float, J: float) -> float:
    """Splitting threshold: apocenter of the collinear homographic motion.

    sqrt(I*) is the larger root of H = J^2/(2I) - U_hat/sqrt(I), with U_hat
    the saddle potential value.  Above this threshold the admissible region
    splits into three far-body components.  Raises NoSplittingError when the
    discriminant is negative (J too large for this derivation at this H).
    """
    if not H < 0.0:
        raise ValueError("H must be negative")
    u_hat = euler_potential_saddle(mp)
    disc = u_hat * u_hat - 2.0 * abs(H) * J * J
    if disc < 0.0:
        raise NoSplittingError(
            f"no splitting at these levels: U^2 = {u_hat**2:.6g} < 2|H|J^2 = {2*abs(H)*J*J:.6g}"
        )
    s = (u_hat + math.sqrt(disc)) / (2.0 * abs(H))
    return s * s


# ---------------------------------------------------------------------------
# Region constants

@dataclass(frozen=True)
class RegionConstants:
    """Bounds valid throughout the far-body component above i_star_eff.

    c_r caps the binary separation, c_j2 the outer angular momentum
    (|J2| <= alpha2 c_j2), and c_g / c_g2 are the Taylor-remainder constants
    with |g| <= c_g r^2/rho^3 and |g_xi2| <= c_g2 r^2/rho^4 for r <= sigma rho.
    c_g1 (|g_xi1| <= c_g1 r/rho^3) is carried along for completeness; nothing
    downstream uses it.
    """

    sigma: float
    c_r: float
    c_j2: float
    c_g: float
    c_g1: float
    c_g2: float
    rho_min: float
    i_star_raw: float
    i_star_eff: float


def _taylor_constants(mp: MassParams, sigma: float):
    """Remainder constants for the coupling term under r <= sigma rho.

    Second-order Taylor expansion of both 1/|xi2 +- mu_i xi1| terms about
    xi1 = 0: the zeroth and first orders cancel against beta2/rho, and the
    second derivative of y -> 1/|y| (resp. y -> y/|y|^3) is bounded by
    4/|y|^3 (resp. 24/|y|^4) with |y| >= (1 - sigma) rho.
    """
    base = mp.m3 * mp.alpha1
    one = 1.0 - sigma
    c_g = 2.0 * base / one**3
    c_g1 = 4.0 * base / one**3
    c_g2 = 12.0 * base / one**4
    return c_g, c_g1, c_g2


def region_constants(
    mp: MassParams, H: float, J: float, sigma: float = DEFAULT_SIGMA
) -> RegionConstants:
    """Explicit region bounds, plus the enforced threshold that makes them
    hold pointwise.

    Derivations:
      c_r    = 2 beta1/|H|: with rho >= rho_min the outer and coupling terms
               eat at most |H|/2, so H1 <= H/2 and -beta1/r <= H1 forces it.
      c_j2   = (|J| + 2 beta1 sqrt(alpha1/|H|))/alpha2: |J1| <= sqrt(2
               alpha1 beta1 r) from the same H1 <= H/2 budget, then the
               triangle inequality on J = J1 + J2.
      rho_min: the larger of the root of beta2/rho + c_g c_r^2/rho^3 = |H|/2
               and 2 beta2/((1-sigma)|H|).  The second term is a feasibility
               backstop: any configuration with U >= |H| (necessary at the
               energy level) and rho >= it satisfies m1 m2/r >= |H|/2
               directly, closing the loop in the c_r derivation without
               assuming r <= c_r first.
      i_star_eff: i_star raised until I > i_star_eff (with r <= sigma rho and
               U >= |H|) pins rho >= max(rho_min, c_r/sigma), making all four
               bounds pointwise-checkable.  The raw i_star is kept alongside;
               it is the honest splitting threshold.
    """
    if not H < 0.0:
        raise ValueError("H must be negative")
    if not 0.0 < sigma <= 0.5:
        raise ValueError("sigma must lie in (0, 1/2]")
    absH = abs(H)
    c_g, c_g1, c_g2 = _taylor_constants(mp, sigma)
    c_r = 2.0 * mp.beta1 / absH
    c_j2 = (abs(J) + 2.0 * mp.beta1 * math.sqrt(mp.alpha1 / absH)) / mp.alpha2

    def budget(rho):
        return mp.beta2 / rho + c_g * c_r**2 / rho**3 - 0.5 * absH

    lo = mp.beta2 / absH  # budget(lo) >= beta2/lo - |H|/2 = |H|/2 > 0
    hi = 4.0 * mp.beta2 / absH
    while budget(hi) > 0.0:
        hi *= 2.0
    rho_root = brentq(budget, lo, hi, xtol=1e-300, rtol=8.881784197001252e-16)
    rho_feas = 2.0 * mp.beta2 / ((1.0 - sigma) * absH)
    rho_min = max(rho_root, rho_feas)

    raw = i_star(mp, H, J)
    a1, a2 = mp.alpha1, mp.alpha2
    eff = max(
        raw,
        a1 * c_r**2 + a2 * rho_min**2,
        a1 * c_r**2 + a2 * (c_r / sigma) ** 2,
        (a1 * sigma**2 + a2) * rho_min**2,
    )
    return RegionConstants(
        sigma=sigma,
        c_r=c_r,
        c_j2=c_j2,
        c_g=c_g,
        c_g1=c_g1,
        c_g2=c_g2,
        rho_min=rho_min,
        i_star_raw=raw,
        i_star_eff=eff,
    )


def i_star_star(rc: RegionConstants, mp: MassParams) -> float:
    """Osculating-pericenter threshold max{I*, alpha1 c_r^2 + alpha2 c_J2^4/M^2}.

    Any outer osculating orbit started above it falls below it no later than
    its pericenter passage.  Uses the raw splitting threshold, matching the
    comparison against the monotonicity method: whenever the second branch
    binds, I** < I_M follows from delta < 1 alone.
    """
    return max(rc.i_star_raw, mp.alpha1 * rc.c_r**2 + mp.alpha2 * rc.c_j2**4 / mp.M**2)


# ---------------------------------------------------------------------------
# Deviation constants

@dataclass(frozen=True)
class DeviationConstants:
    """Constants of the osculating-deviation estimate.

    A bounds the outer perturbing acceleration by A eps^4; b bounds the
    outer angular-momentum-squared drift by b eps^(3/2) over the horizon
    B1 eps^(-3/2); a = b + A feeds the comparison equations; A1 eps is the
    resulting radial deviation bound, valid above R_bar.
    """

    A: float
    a: float
    b: float
    A1: float
    B1: float
    R_bar: float


def deviation_constants(
    rc: RegionConstants, mp: MassParams, B1: Optional[float] = None
) -> DeviationConstants:
    """A = alpha2^-1 c_g2 c_r^2, b = (A B1)^2 + 2 c_J2 A B1, a = b + A,
    A1 = (a/M)(2 + exp(sqrt(2M + 3 c_J2^2) B1)).

    B1 defaults to 2^(3/2) pi / sqrt(M), the value the strip argument needs.
    R_bar = max{I*, alpha1 c_r^2 + max{1, (3 c_J2^2/(2M))^2} alpha2} is the
    level above which the estimate applies (it also pins eps <= 1).
    """
    M = mp.M
    if B1 is None:
        B1 = 2.0**1.5 * math.pi / math.sqrt(M)
    if B1 < 0.0:
        raise ValueError("B1 must be nonnegative")
    A = rc.c_g2 * rc.c_r**2 / mp.alpha2
    b = (A * B1) ** 2 + 2.0 * rc.c_j2 * A * B1
    a = b + A
    k_max = 2.0 * M + 3.0 * rc.c_j2**2
    A1 = (a / M) * (2.0 + math.exp(math.sqrt(k_max) * B1))
    R_bar = max(
        rc.i_star_eff,
        mp.alpha1 * rc.c_r**2
        + max(1.0, (3.0 * rc.c_j2**2 / (2.0 * M)) ** 2) * mp.alpha2,
    )
    return DeviationConstants(A=A, a=a, b=b, A1=A1, B1=B1, R_bar=R_bar)


# ---------------------------------------------------------------------------
# Strips and the final threshold

@dataclass(frozen=True)
class StripConstants:
    R: float
    lam: float
    lambda_prime: float
    R_bar_lambda: float
    R_lambda: float


def strip_and_main(
    rc: RegionConstants,
    dc: DeviationConstants,
    mp: MassParams,
    lam: float,
    i_star2: Optional[float] = None,
) -> StripConstants:
    """R = max{R_bar, I**, 4 alpha1 c_r^2}; then for the strip parameter
    lam > 0: R_bar_lambda = max{R, alpha1 c_r^2 + alpha2 (alpha2 A1^2/lam),
    2 alpha2 A1 + 4 alpha1 c_r^2 + lam} and R_lambda = R_bar_lambda +
    2 alpha2 A1 + lam.

    Strips [I_s + lambda', I_s^+] with I_s = R_bar_lambda + s and
    I_s^+ = 4(I_s - alpha1 c_r^2) cover [R_lambda, inf); an orbit entering a
    strip is forced below its floor, hence down the ladder.
    """
    if not lam > 0.0:
        raise ValueError("lambda must be positive")
    if i_star2 is None:
        i_star2 = i_star_star(rc, mp)
    a1, a2 = mp.alpha1, mp.alpha2
    R = max(dc.R_bar, i_star2, 4.0 * a1 * rc.c_r**2)
    lambda_prime = 2.0 * a2 * dc.A1 + lam
    R_bar_lambda = max(
        R,
        a1 * rc.c_r**2 + a2 * (a2 * dc.A1**2 / lam),
        2.0 * a2 * dc.A1 + 4.0 * a1 * rc.c_r**2 + lam,
    )
    R_lambda = R_bar_lambda + lambda_prime
    return StripConstants(
        R=R, lam=lam, lambda_prime=lambda_prime,
        R_bar_lambda=R_bar_lambda, R_lambda=R_lambda,
    )


def _golden_min(f: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-6):
    """Golden-section minimizer (deterministic, derivative-free)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rtol * max(abs(a), abs(b), 1e-12):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


# ---------------------------------------------------------------------------
# Marchal comparison

@dataclass(frozen=True)
class MarchalComparison:
    """Constants of Marchal's rho-acceleration method, for comparison.

    phi(lam, gamma) with lam = r/rho and gamma the angle between the Jacobi
    vectors is the (normalized) radial attraction factor; its minimum delta
    over the admissible (lam, gamma) range gives rho_M = c_J2^2/(M delta) and
    I_M = alpha1 c_r^2 + alpha2 rho_M^2, above which rho must decelerate.
    Since delta < 1, the pericenter route's I** sits strictly below I_M.
    """

    delta: float
    rho_M: float
    I_M: float
    lam_max: float


def marchal_phi(mp: MassParams, lam, gamma):
    """Two-term attraction factor; phi(0, gamma) = 1 for all gamma."""
    mu1, mu2 = mp.mu1, mp.mu2
    cg = np.cos(gamma)
    t1 = mu1 * (1.0 + mu2 * cg * lam) / (1.0 + 2.0 * mu2 * cg * lam + (mu2 * lam) ** 2) ** 1.5
    t2 = mu2 * (1.0 - mu1 * cg * lam) / (1.0 - 2.0 * mu1 * cg * lam + (mu1 * lam) ** 2) ** 1.5
    return t1 + t2


def marchal_comparison(rc: RegionConstants, mp: MassParams, grid: int = 512) -> MarchalComparison:
    """delta = min phi over lam in [0, lam_max] x gamma in [0, pi], by dense
    grid plus golden refinement along each axis.

    lam_max is the largest r/rho the region I >= I* admits (capped at sigma,
    the component's own separation ratio, which also keeps both denominators
    of phi away from zero).  Minimizing over this superset of the admissible
    ratios is conservative: it can only lower delta and raise I_M.
    """
    a1, a2 = mp.alpha1, mp.alpha2
    val = (rc.i_star_raw - a1 * rc.c_r**2) / a2
    if val > 0.0:
        lam_max = min(rc.c_r / math.sqrt(val), rc.sigma)
    else:
        lam_max = rc.sigma
    lams = np.linspace(0.0, lam_max, grid)
    gammas = np.linspace(0.0, math.pi, grid)
    vals = marchal_phi(mp, lams[:, None], gammas[None, :])
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    lam0, gam0 = lams[i], gammas[j]

    # refine each coordinate in its grid neighborhood
    dl = lams[1] - lams[0] if grid > 1 else 0.0
    dg = gammas[1] - gammas[0] if grid > 1 else 0.0
    lam_best, gam_best = lam0, gam0
    for _ in range(2):
        if dl > 0:
            lam_best, _ = _golden_min(
                lambda L: float(marchal_phi(mp, L, gam_best)),
                max(0.0, lam_best - dl), min(lam_max, lam_best + dl), rtol=1e-12,
            )
        if dg > 0:
            gam_best, _ = _golden_min(
                lambda G: float(marchal_phi(mp, lam_best, G)),
                max(0.0, gam_best - dg), min(math.pi, gam_best + dg), rtol=1e-12,
            )
    delta = min(float(vals[i, j]), float(marchal_phi(mp, lam_best, gam_best)))
    if not delta > 0.0:
        raise ValueError("phi minimum not positive; region constants inconsistent")
    rho_M = rc.c_j2**2 / (mp.M * delta)
    I_M = a1 * rc.c_r**2 + a2 * rho_M**2
    return MarchalComparison(delta=delta, rho_M=rho_M, I_M=I_M, lam_max=lam_max)


# ---------------------------------------------------------------------------
# The assembled chain

@dataclass(frozen=True)
class BoundSet:
    """Every constant of the chain for one far-body choice.

    Also carries the level-dependent helpers: rho_bar(I) and epsilon(I) for
    a query level, the strip ceiling I_plus(I), and the strip ladder
    strip(s).  i0 is the minimized R_lambda for this far body.
    """

    far_body: int
    masses: tuple
    H: float
    J: float
    sigma: float
    c_r: float
    c_j2: float
    c_g: float
    c_g1: float
    c_g2: float
    rho_min: float
    i_star: float
    i_star_eff: float
    i_star2: float
    A: float
    a: float
    b: float
    A1: float
    B1: float
    R_bar: float
    R: float
    lam: float
    lambda_prime: float
    R_bar_lambda: float
    R_lambda: float
    i0: float
    marchal: MarchalComparison

    @property
    def mp(self) -> MassParams:
        return MassParams(*self.masses)

    def rho_bar(self, I_bar: float) -> float:
        """Least outer distance compatible with I >= I_bar and r <= c_r."""
        mp = self.mp
        val = (I_bar - mp.alpha1 * self.c_r**2) / mp.alpha2
        if val <= 0.0:
            raise ValueError(f"level {I_bar} sits below alpha1 c_r^2")
        return math.sqrt(val)

    def epsilon(self, I_bar: float) -> float:
        return 1.0 / self.rho_bar(I_bar)

    def i_plus(self, I_bar: float) -> float:
        """Strip ceiling 4 (I_bar - alpha1 c_r^2)."""
        mp = self.mp
        return 4.0 * (I_bar - mp.alpha1 * self.c_r**2)

    def strip(self, s: float):
        """(I_s, I_s^+) for the ladder I_s = R_bar_lambda + s, s >= 0."""
        if s < 0.0:
            raise ValueError("s must be nonnegative")
        I_s = self.R_bar_lambda + s
        return I_s, self.i_plus(I_s)

    def to_dict(self) -> dict:
        return {
            "far_body": self.far_body,
            "masses": list(self.masses),
            "H": self.H,
            "J": self.J,
            "sigma": self.sigma,
            "c_r": self.c_r,
            "c_J2": self.c_j2,
            "c_g": self.c_g,
            "c_g1": self.c_g1,
            "c_g2": self.c_g2,
            "rho_min": self.rho_min,
            "I_star": self.i_star,
            "I_star_eff": self.i_star_eff,
            "I_star2": self.i_star2,
            "A": self.A,
            "a": self.a,
            "b": self.b,
            "A1": self.A1,
            "B1": self.B1,
            "R_bar": self.R_bar,
            "R": self.R,
            "lambda": self.lam,
            "lambda_prime": self.lambda_prime,
            "R_bar_lambda": self.R_bar_lambda,
            "R_lambda": self.R_lambda,
            "I0": self.i0,
            "marchal": {
                "delta": self.marchal.delta,
                "rho_M": self.marchal.rho_M,
                "I_M": self.marchal.I_M,
                "lam_max": self.marchal.lam_max,
            },
        }


def _minimize_r_lambda(rc, dc, mp, i_star2):
    """min over lam in (0,1): 64 log-spaced samples, then golden refinement."""
    def r_of(lam):
        return strip_and_main(rc, dc, mp, lam, i_star2=i_star2).R_lambda

    lams = np.logspace(-6.0, math.log10(1.0 - 1e-9), 64)
    vals = [r_of(L) for L in lams]
    k = int(np.argmin(vals))
    lo = lams[max(k - 1, 0)]
    hi = lams[min(k + 1, len(lams) - 1)]
    lam_best, _ = _golden_min(r_of, lo, hi, rtol=1e-6)
    if r_of(lam_best) > vals[k]:
        lam_best = lams[k]
    return lam_best


def compute_chain(
    mp: MassParams,
    H: float,
    J: float,
    far_body: int = 3,
    sigma: float = DEFAULT_SIGMA,
    lam: Optional[float] = None,
    B1: Optional[float] = None,
) -> BoundSet:
    """Run the whole chain for one far-body choice.

    lam = None minimizes R_lambda over (0, 1); an explicit lam pins it.
    """
    mpk = mp.relabeled(far_body)
    rc = region_constants(mpk, H, J, sigma=sigma)
    i2 = i_star_star(rc, mpk)
    dc = deviation_constants(rc, mpk, B1=B1)
    if lam is None:
        lam_used = _minimize_r_lambda(rc, dc, mpk, i2)
    else:
        lam_used = lam
    sc = strip_and_main(rc, dc, mpk, lam_used, i_star2=i2)
    mc = marchal_comparison(rc, mpk)
    return BoundSet(
        far_body=far_body,
        masses=mp.masses(),
        H=H,
        J=J,
        sigma=sigma,
        c_r=rc.c_r,
        c_j2=rc.c_j2,
        c_g=rc.c_g,
        c_g1=rc.c_g1,
        c_g2=rc.c_g2,
        rho_min=rc.rho_min,
        i_star=rc.i_star_raw,
        i_star_eff=rc.i_star_eff,
        i_star2=i2,
        A=dc.A,
        a=dc.a,
        b=dc.b,
        A1=dc.A1,
        B1=dc.B1,
        R_bar=dc.R_bar,
        R=sc.R,
        lam=sc.lam,
        lambda_prime=sc.lambda_prime,
        R_bar_lambda=sc.R_bar_lambda,
        R_lambda=sc.R_lambda,
        i0=sc.R_lambda,
        marchal=mc,
    )


def i0(
    mp: MassParams,
    H: float,
    J: float,
    sigma: float = DEFAULT_SIGMA,
    lam: Optional[float] = None,
    B1: Optional[float] = None,
):
    """Final threshold I0(m, H, J) and the bound set that realizes it.

    The chain is run once per far-body labeling; the threshold must work in
    all three components, so the reported I0 is the maximum over the three
    and the returned BoundSet is the binding one.
    """
    best = None
    for k in (1, 2, 3):
        bs = compute_chain(mp, H, J, far_body=k, sigma=sigma, lam=lam, B1=B1)
        if best is None or bs.i0 > best.i0:
            best = bs
    return best.i0, best
