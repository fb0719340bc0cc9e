"""Mean-field (cold fluid) equilibrium of a long ion cloud in a linear trap.

For a prolate nonneutral plasma at temperature T, the density referenced
to the on-axis value, n(r) = n0 exp(Psi), obeys a Poisson equation for the
logarithmic profile.  With radii in units of the central Debye length
lambda_D = sqrt(k_B T eps0 / (q^2 n0)) the radial problem closes over a
single shape parameter:

    quadrupole:  Psi'' + Psi'/rho = exp(Psi) - gamma - 1,
                 gamma = n_c/n0 - 1 >= 0 measures the distance from the
                 space-charge limit density n_c,
    2k-pole:     Psi'' + Psi'/rho = exp(Psi) - alpha rho^(2k-4),
                 alpha collects the trap strength and scales as n0^(1-k),

with Psi(0) = 0, Psi'(0) = 0.  The number of ions per unit length fixes
the shape parameter through N/2L = (k_B T eps0/q^2) Int exp(Psi) 2 pi rho drho,
and lambda_D then restores physical units.

Multipole profiles sit on the unstable balance exp(Psi) ~ alpha rho^(2k-4);
below a critical alpha the on-axis-referenced solution self-amplifies and
blows up at finite radius, which bounds the coldest/densest clouds this
integration can reach.  Such runs are returned flagged, and matching
treats them as "more ions than requested".
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.optimize import brentq

from .constants import EPSILON_0, K_B
from .model import (IonSpecies, LinearTrap, QuadrupoleOnlyError,
                    characteristic_energy, debye_length, limit_density,
                    adiabaticity, secular_frequencies)

__all__ = [
    "ReducedProfile", "ScaledCloud", "ProfileDivergenceError",
    "IncompleteProfileError", "MatchBracketError",
    "integrate_profile_quadrupole", "integrate_profile_multipole",
    "reduced_linear_density", "poisson_residual", "match_gamma",
    "match_alpha", "scale_quadrupole", "scale_multipole",
    "cold_limit_radius", "adiabatic_radius", "fit_ratio",
    "cold_limit_density", "reduced_density_per_kelvin",
]

_RHO_START = 1e-6      # series launch radius removing the 1/rho singularity
_PSI_BLOWUP = 25.0     # on-axis-referenced density 7e10: clearly divergent
_STEP_FLOOR = 1e-12    # documented adaptive-step floor in rho

GAMMA_LOG10_BRACKET = (-280.0, 6.0)
ALPHA_LOG10_BRACKET = (-12.0, 8.0)


class ProfileDivergenceError(RuntimeError):
    """Quadrupole profile grew positive: invalid shape parameter or bug."""


class IncompleteProfileError(ValueError):
    """Operation requires a profile integrated through its edge."""


class MatchBracketError(ValueError):
    """Requested linear density unreachable within the shape bracket."""


@dataclass(frozen=True)
class ReducedProfile:
    """Dimensionless radial solution Psi(rho) of the reduced equation.

    rho_max is the cloud edge: the first radius past the density maximum
    where exp(Psi)/max exp(Psi) falls below edge_threshold.  For profiles
    flagged incomplete (step underflow or divergence) rho_max and the
    reduced linear density are present only if the edge was bracketed
    before the failure.
    """

    kind: str                 # "quadrupole" or "multipole"
    k: int
    shape: float              # gamma (quadrupole) or alpha (multipole)
    rho: np.ndarray
    psi: np.ndarray
    rho_max: Optional[float]
    reduced_linear_density: Optional[float]
    edge_threshold: float
    psi_peak: float
    complete: bool
    diverged: bool = False
    step_underflow: bool = False

    @property
    def density(self) -> np.ndarray:
        """n(rho)/n0."""
        return np.exp(self.psi)

    @property
    def peak_to_central(self) -> float:
        """max n / n0; 1 for any quadrupole profile."""
        return math.exp(self.psi_peak)


@dataclass(frozen=True)
class ScaledCloud:
    """Reduced profile restored to physical units."""

    profile: ReducedProfile
    ion: IonSpecies
    temperature: float        # K
    n0: float                 # central density [m^-3]
    lambda_d: float           # central Debye length [m]
    radius: float             # cloud radius lambda_d * rho_max [m]
    linear_density: float     # ions per metre
    trap: Optional[LinearTrap] = None
    omega_x: Optional[float] = None


def reduced_density_per_kelvin(ion: IonSpecies) -> float:
    """k_B eps0 / q^2: converts reduced linear density to ions/m per kelvin."""
    return K_B * EPSILON_0 / ion.charge ** 2


# --- reduced-equation integration -------------------------------------------

@dataclass
class _RawSolution:
    sol: object               # solve_ivp result with dense output
    rho_max: Optional[float]
    reduced: Optional[float]
    psi_peak: float
    diverged: bool
    capped: bool
    underflow: bool


def _rhs_quadrupole(gamma):
    def rhs(rho, y):
        psi, dpsi, _ = y
        e = math.exp(min(psi, _PSI_BLOWUP + 5.0))
        # expm1 keeps exp(Psi) - 1 accurate down to |Psi| ~ 1e-300
        return (dpsi,
                math.expm1(min(psi, _PSI_BLOWUP + 5.0)) - gamma - dpsi / rho,
                e * 2.0 * math.pi * rho)
    return rhs


def _rhs_multipole(alpha, k):
    p = 2 * k - 4
    def rhs(rho, y):
        psi, dpsi, _ = y
        e = math.exp(min(psi, _PSI_BLOWUP + 5.0))
        return (dpsi, e - alpha * rho ** p - dpsi / rho,
                e * 2.0 * math.pi * rho)
    return rhs


def _integrate_raw(kind, shape, k, edge_threshold, rho_cap):
    """Integrate the reduced equation with the edge/divergence guards."""
    ln_thr = math.log(edge_threshold)
    if kind == "quadrupole":
        rhs = _rhs_quadrupole(shape)
        curv = -shape        # Psi ~ -gamma rho^2 / 4 near the axis
        blow_level = 1.0     # any positive growth is invalid here
    else:
        rhs = _rhs_multipole(shape, k)
        curv = 1.0           # Psi ~ +rho^2 / 4: density climbs off axis
        blow_level = _PSI_BLOWUP

    r = _RHO_START
    y0 = (curv * r * r / 4.0, curv * r / 2.0, math.pi * r * r)

    def edge(rho, y):
        return y[0] - ln_thr
    edge.terminal = True
    edge.direction = -1

    def blowup(rho, y):
        return y[0] - blow_level
    blowup.terminal = True
    blowup.direction = 1

    sol = solve_ivp(rhs, (r, rho_cap), y0, method="LSODA",
                    rtol=1e-10, atol=1e-300, events=(edge, blowup),
                    dense_output=True, min_step=_STEP_FLOOR)

    diverged = len(sol.t_events[1]) > 0
    edge_hit = len(sol.t_events[0]) > 0
    underflow = sol.status == -1
    capped = sol.status == 0 and not edge_hit and not diverged

    # peak of Psi over the integrated span
    ts = np.linspace(sol.t[0], sol.t[-1], 4096)
    ps = sol.sol(ts)[0]
    ipk = int(np.argmax(ps))
    psi_peak = float(ps[ipk])
    if 0 < ipk < len(ts) - 1:
        from scipy.optimize import minimize_scalar
        res = minimize_scalar(lambda x: -sol.sol(x)[0],
                              bounds=(ts[ipk - 1], ts[ipk + 1]), method="bounded")
        psi_peak = max(psi_peak, float(-res.fun))
    psi_peak = max(psi_peak, 0.0)

    # cloud edge: first crossing of psi_peak + ln(threshold) past the peak
    rho_max = reduced = None
    if not diverged:
        level = psi_peak + ln_thr
        tail = ts[ts >= ts[ipk]]
        vals = sol.sol(tail)[0] - level
        # the terminal edge event lands within float noise of the level
        below = np.nonzero(vals <= 1e-12)[0]
        if len(below):
            j = below[0]
            if j == 0 or vals[j] >= 0.0:
                rho_max = float(tail[j])
            else:
                rho_max = brentq(lambda x: sol.sol(x)[0] - level,
                                 tail[j - 1], tail[j], xtol=1e-12)
            reduced = float(sol.sol(rho_max)[2])

    return _RawSolution(sol=sol, rho_max=rho_max, reduced=reduced,
                        psi_peak=psi_peak, diverged=diverged,
                        capped=capped, underflow=underflow)


def _sample_grid(raw, rho_max, curv, samples):
    """Uniform [0, rho_max] grid; the series covers rho below the launch."""
    rho = np.linspace(0.0, rho_max, samples)
    psi = np.empty_like(rho)
    small = rho < _RHO_START
    psi[small] = curv * rho[small] ** 2 / 4.0
    psi[~small] = raw.sol.sol(rho[~small])[0]
    return rho, psi


def integrate_profile_quadrupole(gamma: float, edge_threshold: float = 1e-3,
                                 samples: int = 8192,
                                 rho_cap: float = 1500.0) -> ReducedProfile:
    """Solve the quadrupole reduced profile for density-depression gamma.

    The profile starts flat at the axis (n = n0), stays within n0, and is
    integrated until n/n0 reaches edge_threshold; that radius is rho_max.
    Raises ProfileDivergenceError if Psi turns positive (impossible for
    gamma > 0) and returns a flagged partial profile on step underflow.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if not 0.0 < edge_threshold < 1.0:
        raise ValueError("edge_threshold must be in (0, 1)")
    raw = _integrate_raw("quadrupole", gamma, 2, edge_threshold, rho_cap)
    if raw.diverged:
        raise ProfileDivergenceError(
            f"divergence: quadrupole profile grew past Psi=1 at gamma={gamma}")
    if raw.underflow or raw.rho_max is None:
        end = float(raw.sol.t[-1])
        rho, psi = _sample_grid(raw, end, -gamma, samples)
        return ReducedProfile(kind="quadrupole", k=2, shape=gamma, rho=rho,
                              psi=psi, rho_max=raw.rho_max, reduced_linear_density=raw.reduced,
                              edge_threshold=edge_threshold, psi_peak=raw.psi_peak,
                              complete=False, step_underflow=raw.underflow)
    rho, psi = _sample_grid(raw, raw.rho_max, -gamma, samples)
    return ReducedProfile(kind="quadrupole", k=2, shape=gamma, rho=rho,
                          psi=psi, rho_max=raw.rho_max,
                          reduced_linear_density=raw.reduced,
                          edge_threshold=edge_threshold, psi_peak=raw.psi_peak,
                          complete=True)


def integrate_profile_multipole(alpha: float, k: int,
                                edge_threshold: float = 1e-3,
                                samples: int = 65536,
                                rho_cap: float = 3000.0,
                                method: str = "radial") -> ReducedProfile:
    """Solve the 2k-pole (k >= 3) reduced profile for trap parameter alpha.

    Off axis the density climbs toward exp(Psi) ~ alpha rho^(2k-4), peaks,
    and collapses; rho_max is where n falls to edge_threshold of the peak.
    Below a critical alpha the on-axis-referenced solution diverges at
    finite radius instead: the profile is returned with ``diverged`` set
    (no edge exists).  Step underflow likewise returns a flagged partial
    profile; ``method="arclength"`` integrates against arc length, which
    tolerates steeper edges.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if k < 3:
        raise ValueError("multipole profile requires k >= 3 (use the quadrupole form)")
    if not 0.0 < edge_threshold < 1.0:
        raise ValueError("edge_threshold must be in (0, 1)")
    if method == "arclength":
        raw, psi_of_rho, rho_end = _integrate_arclength(alpha, k, edge_threshold, rho_cap)
    else:
        raw = _integrate_raw("multipole", alpha, k, edge_threshold, rho_cap)
        psi_of_rho = lambda r: raw.sol.sol(r)[0]
        rho_end = float(raw.sol.t[-1])
    complete = (not raw.diverged) and (not raw.underflow) and raw.rho_max is not None
    end = raw.rho_max if complete else rho_end
    rho = np.linspace(0.0, end, samples)
    psi = np.empty_like(rho)
    small = rho < _RHO_START
    psi[small] = rho[small] ** 2 / 4.0
    psi[~small] = psi_of_rho(rho[~small])
    return ReducedProfile(kind="multipole", k=k, shape=alpha, rho=rho, psi=psi,
                          rho_max=raw.rho_max, reduced_linear_density=raw.reduced,
                          edge_threshold=edge_threshold, psi_peak=raw.psi_peak,
                          complete=complete, diverged=raw.diverged,
                          step_underflow=raw.underflow)


# --- arc-length variant: steep cold edges advance in s, not rho -------------

@dataclass
class _ArcOutcome:
    rho_max: Optional[float]
    reduced: Optional[float]
    psi_peak: float
    diverged: bool
    capped: bool
    underflow: bool


def _integrate_arclength(alpha, k, edge_threshold, rho_cap):
    ln_thr = math.log(edge_threshold)
    p = 2 * k - 4

    def rhs(s, y):
        rho, psi, phi, _ = y
        g = math.sqrt(1.0 + phi * phi)
        e = math.exp(min(psi, _PSI_BLOWUP + 5.0))
        curv = e - alpha * rho ** p - phi / rho
        return (1.0 / g, phi / g, curv / g, e * 2.0 * math.pi * rho / g)

    r = _RHO_START
    y0 = (r, r * r / 4.0, r / 2.0, math.pi * r * r)

    def edge(s, y):
        return y[1] - ln_thr
    edge.terminal = True
    edge.direction = -1

    def blowup(s, y):
        return y[1] - _PSI_BLOWUP
    blowup.terminal = True
    blowup.direction = 1

    def cap(s, y):
        return y[0] - rho_cap
    cap.terminal = True

    s_cap = rho_cap + 10.0 * abs(ln_thr) + 100.0
    sol = solve_ivp(rhs, (0.0, s_cap), y0, method="LSODA", rtol=1e-10,
                    atol=1e-300, events=(edge, blowup, cap),
                    dense_output=True, min_step=_STEP_FLOOR)

    diverged = len(sol.t_events[1]) > 0
    underflow = sol.status == -1
    capped = len(sol.t_events[2]) > 0

    ss = np.linspace(sol.t[0], sol.t[-1], 16384)
    rho_s, psi_s, _, red_s = sol.sol(ss)
    # rho(s) is strictly increasing: re-spline psi and the integral over rho
    from scipy.interpolate import CubicSpline
    keep = np.concatenate(([True], np.diff(rho_s) > 0))
    spl_psi = CubicSpline(rho_s[keep], psi_s[keep])
    spl_red = CubicSpline(rho_s[keep], red_s[keep])

    ipk = int(np.argmax(psi_s))
    psi_peak = max(float(psi_s[ipk]), 0.0)
    rho_max = reduced = None
    if not diverged:
        level = psi_peak + ln_thr
        tail = rho_s[ipk:]
        below = np.nonzero(psi_s[ipk:] - level <= 1e-12)[0]
        if len(below):
            j = below[0]
            lo = tail[max(j - 1, 0)]
            hi = tail[j]
            if hi > lo and spl_psi(lo) - level > 0.0 > spl_psi(hi) - level:
                rho_max = float(brentq(lambda x: spl_psi(x) - level, lo, hi,
                                       xtol=1e-12))
            else:
                rho_max = float(hi)
            reduced = float(spl_red(rho_max))

    outcome = _ArcOutcome(rho_max=rho_max, reduced=reduced, psi_peak=psi_peak,
                          diverged=diverged, capped=capped, underflow=underflow)
    return outcome, spl_psi, float(rho_s[-1])


# --- derived quantities ------------------------------------------------------

def reduced_linear_density(profile: ReducedProfile) -> float:
    """Quadrature of Int exp(Psi) 2 pi rho drho over the stored profile."""
    if not profile.complete:
        raise IncompleteProfileError("incomplete profile: edge not reached")
    integrand = np.exp(profile.psi) * 2.0 * np.pi * profile.rho
    return float(simpson(integrand, x=profile.rho))


def poisson_residual(profile: ReducedProfile) -> float:
    """Max |discrete Laplacian of Psi - source| over interior grid points."""
    rho, psi = profile.rho, profile.psi
    h = rho[1] - rho[0]
    lap = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / h ** 2 \
        + (psi[2:] - psi[:-2]) / (2.0 * h * rho[1:-1])
    if profile.kind == "quadrupole":
        src = np.expm1(psi[1:-1]) - profile.shape
    else:
        src = np.exp(psi[1:-1]) - profile.shape * rho[1:-1] ** (2 * profile.k - 4)
    return float(np.max(np.abs(lap - src)))


# --- matching a target linear density ----------------------------------------

def _reduced_target(linear_density: float, temperature: float,
                    ion: IonSpecies) -> float:
    return linear_density / (reduced_density_per_kelvin(ion) * temperature)


def _quad_reduced(gamma: float, edge_threshold: float, rho_cap: float) -> float:
    raw = _integrate_raw("quadrupole", gamma, 2, edge_threshold, rho_cap)
    if raw.diverged:
        raise ProfileDivergenceError(f"divergence at gamma={gamma}")
    if raw.reduced is None:
        return math.inf
    return raw.reduced


def _multi_reduced(alpha: float, k: int, edge_threshold: float,
                   rho_cap: float) -> float:
    raw = _integrate_raw("multipole", alpha, k, edge_threshold, rho_cap)
    if raw.reduced is None:
        # diverged / capped / underflow before the edge: the cloud holds
        # more charge than any finite-edge profile at this alpha
        return math.inf
    return raw.reduced


def _bisect_log(f, target, lo, hi, rel_tol, max_iter, label):
    """Bisect log10(shape) for a decreasing reduced density f."""
    f_lo = f(10.0 ** lo)
    f_hi = f(10.0 ** hi)
    if not (f_lo > f_hi):
        raise MatchBracketError(
            f"{label}: reduced density not decreasing across the bracket")
    if target > f_lo or target < f_hi:
        raise MatchBracketError(
            f"out of bracket: target reduced density {target:.4g} outside "
            f"[{f_hi:.4g}, {f_lo if f_lo != math.inf else float('inf'):.4g}] "
            f"for log10 {label} in [{lo}, {hi}]")
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = f(10.0 ** mid)
        if val != math.inf and abs(val - target) <= rel_tol * target:
            best = 10.0 ** mid
            break
        if val > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    if best is None:
        mid = 0.5 * (lo + hi)
        val = f(10.0 ** mid)
        if val == math.inf or abs(val - target) > rel_tol * target:
            raise MatchBracketError(
                f"{label} match did not reach {rel_tol:.1e} relative "
                f"tolerance (target {target:.4g}, last {val:.4g})")
        best = 10.0 ** mid
    return best


def match_gamma(linear_density: float, temperature: float, ion: IonSpecies,
                edge_threshold: float = 1e-3, rel_tol: float = 1e-4,
                max_iter: int = 200, rho_cap: float = 1500.0) -> float:
    """Density-depression gamma whose profile holds the requested ions/m.

    The reduced linear density decreases monotonically with gamma, so a
    log-space bisection over the full bracket is robust; the convergence
    target is rel_tol on the linear density.
    """
    if linear_density <= 0:
        raise ValueError("linear_density must be > 0")
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    target = _reduced_target(linear_density, temperature, ion)
    lo, hi = GAMMA_LOG10_BRACKET
    return _bisect_log(lambda g: _quad_reduced(g, edge_threshold, rho_cap),
                       target, lo, hi, rel_tol, max_iter, "gamma")


def match_alpha(linear_density: float, temperature: float, ion: IonSpecies,
                k: int, edge_threshold: float = 1e-3, rel_tol: float = 1e-4,
                max_iter: int = 200, rho_cap: float = 3000.0) -> float:
    """Multipole trap parameter alpha matching the requested ions/m.

    Bracketing walks outward from the dilute-gas estimate (trap-dominated
    Boltzmann profile) instead of evaluating the extreme bracket ends:
    very small alpha runs terminate in the finite-radius divergence and
    count as infinitely charged.
    """
    if linear_density <= 0:
        raise ValueError("linear_density must be > 0")
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    if k < 3:
        raise ValueError("match_alpha requires k >= 3")
    target = _reduced_target(linear_density, temperature, ion)

    # dilute limit: n/n0 = exp(-alpha rho^(2k-2) / (2k-2)^2) integrates to
    # 2 pi Gamma(1/(k-1))/(2k-2) * ((2k-2)^2/alpha)^(1/(k-1))
    gp = 2.0 * math.pi * math.gamma(1.0 / (k - 1)) / (2 * k - 2)
    seed = (2 * k - 2) ** 2 * (gp / target) ** (k - 1)
    lo_cap, hi_cap = ALPHA_LOG10_BRACKET
    seed = min(max(math.log10(seed), lo_cap + 0.5), hi_cap - 0.5)

    f = lambda a: _multi_reduced(a, k, edge_threshold, rho_cap)
    lo = hi = seed
    val = f(10.0 ** seed)
    if val > target:
        while True:
            hi += 0.5
            if hi > hi_cap:
                raise MatchBracketError(
                    f"out of bracket: target {target:.4g} below reach of "
                    f"log10 alpha <= {hi_cap}")
            if f(10.0 ** hi) <= target:
                break
            lo = hi
    else:
        while True:
            lo -= 0.5
            if lo < lo_cap:
                raise MatchBracketError(
                    f"out of bracket: target {target:.4g} above reach of "
                    f"log10 alpha >= {lo_cap}")
            if f(10.0 ** lo) > target:
                break
            hi = lo
    return _bisect_log(f, target, lo, hi, rel_tol, max_iter, "alpha")


# --- physical scaling ---------------------------------------------------------

def scale_quadrupole(profile: ReducedProfile, ion: IonSpecies,
                     temperature: float, omega_x: Optional[float] = None,
                     trap: Optional[LinearTrap] = None) -> ScaledCloud:
    """Restore a quadrupole profile to metres and m^-3.

    The well strength enters only here: lambda_D^2 (gamma+1) consistency
    with k_B T / (2 m omega_x^2) is exact by construction and re-verified
    to 1e-10.  omega_x may be given directly or derived from a k=2 trap.
    """
    if profile.kind != "quadrupole":
        raise ValueError("scale_quadrupole needs a quadrupole profile")
    if not profile.complete:
        raise IncompleteProfileError("incomplete profile: edge not reached")
    if omega_x is None:
        if trap is None:
            raise ValueError("provide omega_x or a quadrupole trap")
        omega_x = secular_frequencies(trap, ion).omega_x
    gamma = profile.shape
    lam2 = (gamma + 1.0) * K_B * temperature / (2.0 * ion.mass * omega_x ** 2)
    lam = math.sqrt(lam2)
    n0 = limit_density(ion, omega_x) / (gamma + 1.0)
    check = debye_length(ion, temperature, n0)
    if abs(check ** 2 - lam2) > 1e-10 * lam2:
        raise AssertionError("Debye-length identity violated")  # pragma: no cover
    return ScaledCloud(profile=profile, ion=ion, temperature=temperature,
                       n0=n0, lambda_d=lam, radius=lam * profile.rho_max,
                       linear_density=(reduced_density_per_kelvin(ion)
                                       * temperature * profile.reduced_linear_density),
                       trap=trap, omega_x=omega_x)


def scale_multipole(profile: ReducedProfile, trap: LinearTrap,
                    ion: IonSpecies, temperature: float) -> ScaledCloud:
    """Restore a multipole profile to physical units.

    alpha scales as n0^(1-k), so lambda_D^2 / alpha^(1/(k-1)) depends only
    on trap constants and T; that fixes lambda_D, hence n0 and the radius.
    """
    if profile.kind != "multipole":
        raise ValueError("scale_multipole needs a multipole profile")
    if trap.k != profile.k:
        raise ValueError(f"trap k={trap.k} differs from profile k={profile.k}")
    if not profile.complete:
        raise IncompleteProfileError("incomplete profile: edge not reached")
    alpha = profile.shape
    k = trap.k
    ek = float(characteristic_energy(trap, ion))
    base = (32.0 * K_B * temperature * ek * trap.r0 ** (2 * k - 2)
            / ((2 * k - 2) ** 2 * ion.charge ** 2 * trap.v0 ** 2))
    lam2 = alpha ** (1.0 / (k - 1)) * base ** (1.0 / (k - 1))
    lam = math.sqrt(lam2)
    n0 = K_B * temperature * EPSILON_0 / (ion.charge ** 2 * lam2)
    return ScaledCloud(profile=profile, ion=ion, temperature=temperature,
                       n0=n0, lambda_d=lam, radius=lam * profile.rho_max,
                       linear_density=(reduced_density_per_kelvin(ion)
                                       * temperature * profile.reduced_linear_density),
                       trap=trap)


def cold_limit_radius(trap: LinearTrap, ion: IonSpecies, linear_density: float,
                      omega_x: Optional[float] = None) -> float:
    """Minimum (T -> 0) cloud radius holding the given ions per metre.

    Quadrupole: R_m = sqrt(N/2L) sqrt(q^2 / (2 pi eps0)) / (sqrt(m) omega_x);
    2k-pole:    R_m = r0 (N/2L * 8 Ek / (pi eps0 (k-1) V0^2))^(1/(2(k-1))).
    """
    if linear_density <= 0:
        raise ValueError("linear_density must be > 0")
    if trap.k == 2:
        if omega_x is None:
            omega_x = secular_frequencies(trap, ion).omega_x
        return (math.sqrt(linear_density) / (math.sqrt(ion.mass) * omega_x)
                * math.sqrt(ion.charge ** 2 / (2.0 * math.pi * EPSILON_0)))
    ek = float(characteristic_energy(trap, ion))
    inner = (linear_density * 8.0 * ek
             / (math.pi * EPSILON_0 * (trap.k - 1) * trap.v0 ** 2))
    return trap.r0 * inner ** (1.0 / (2.0 * (trap.k - 1)))


def adiabatic_radius(trap: LinearTrap, ion: IonSpecies,
                     eta_lim: float = 0.3) -> float:
    """Largest radius where the adiabaticity parameter stays within eta_lim.

    r_max = r0 (eta_lim 2 k Ek / ((k-1) q V0))^(1/(k-2)) for k >= 3.  The
    quadrupole criterion is global, not local: returns inf when the
    uniform eta is already below eta_lim, else 0.
    """
    if eta_lim <= 0:
        raise ValueError("eta_lim must be > 0")
    if trap.k == 2:
        return math.inf if adiabaticity(trap, ion, 0.0) < eta_lim else 0.0
    if trap.v0 == 0:
        return math.inf
    ek = float(characteristic_energy(trap, ion))
    inner = (eta_lim * 2.0 * trap.k * ek
             / ((trap.k - 1) * abs(ion.charge) * trap.v0))
    return trap.r0 * inner ** (1.0 / (trap.k - 2))


def fit_ratio(trap: LinearTrap, ion: IonSpecies, linear_density: float,
              eta_lim: float = 0.3) -> float:
    """cold_limit_radius / adiabatic_radius: below 1 the cold sample fits."""
    if trap.k == 2:
        raise QuadrupoleOnlyError(
            "fit_ratio is defined for k >= 3 (the quadrupole criterion is global)")
    return (cold_limit_radius(trap, ion, linear_density)
            / adiabatic_radius(trap, ion, eta_lim))


def cold_limit_density(trap: LinearTrap, ion: IonSpecies, r: float) -> float:
    """T -> 0 space-charge density profile, n(r) = eps0 Delta(V*/q).

    n(r) = eps0 (k-1)^2 V0^2 / (8 Ek r0^2) (r/r0)^(2k-4): uniform only in
    the quadrupole, rising as r^(2k-4) otherwise (tube-shaped cloud).
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    ek = float(characteristic_energy(trap, ion))
    base = (EPSILON_0 * (trap.k - 1) ** 2 * trap.v0 ** 2
            / (8.0 * ek * trap.r0 ** 2))
    if trap.k == 2:
        return base
    return base * (r / trap.r0) ** (2 * trap.k - 4)
