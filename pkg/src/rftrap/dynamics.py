"""Single-ion motion in a linear 2k-pole: full RF field and secular limit.

The transverse equations of motion under the rod drive
V(t) = U_s - V0 cos(Omega t + phase) are

    x'' =  r0 F_k(t) (r/r0)^(k-1) cos((k-1) theta)
    y'' = -r0 F_k(t) (r/r0)^(k-1) sin((k-1) theta)
    F_k(t) = k q (U_s - V0 cos(Omega t + phase)) / (2 m r0^2),

plus the static end-electrode pull when configured.  For k = 2 the x
equation reduces to the Mathieu form with a_x = -4 q U_s / (m Omega^2 r0^2)
and |q_x| = 2 q V0 / (m Omega^2 r0^2), so trajectory spectra can be checked
against the continued-fraction exponent directly.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .constants import TWO_PI
from .mathieu import UnstablePointError, beta_from_aq
from .model import (IonSpecies, LinearTrap, adiabaticity,
                    pseudopotential, pseudopotential_force,
                    rf_field_amplitude)

__all__ = [
    "PhaseState", "Trajectory", "StabilityMap", "EscapeError",
    "StepUnderflowError", "TooShortError", "integrate_rf",
    "integrate_secular", "micromotion_amplitude", "motional_spectrum",
    "dominant_frequency", "peak_near", "stability_scan",
    "secular_energy_series",
]


class EscapeError(RuntimeError):
    """Ion reached the electrode radius."""


class StepUnderflowError(RuntimeError):
    """Adaptive step fell below the documented floor."""


class TooShortError(ValueError):
    """Trajectory does not satisfy the spectral preconditions."""


@dataclass(frozen=True)
class PhaseState:
    """Position/velocity sample in SI units."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z", "vx", "vy", "vz", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"PhaseState.{name} must be finite")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled integration result.

    Arrays share one time base t; an escaped trajectory is truncated at
    the wall crossing and flagged rather than raised, so partial data
    stays inspectable.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    vz: np.ndarray
    trap: LinearTrap
    ion: IonSpecies
    dt_sample: float
    kind: str                       # "rf" or "secular"
    escaped: bool = False
    escape_time: Optional[float] = None

    def __len__(self):
        return len(self.t)

    @property
    def r(self) -> np.ndarray:
        return np.hypot(self.x, self.y)

    @property
    def samples(self):
        """PhaseState view of the stored rows."""
        return [PhaseState(x=self.x[i], y=self.y[i], z=self.z[i],
                           vx=self.vx[i], vy=self.vy[i], vz=self.vz[i],
                           t=self.t[i]) for i in range(len(self.t))]

    @property
    def samples_per_rf_period(self) -> float:
        return self.trap.rf_period / self.dt_sample

    def write_csv(self, path) -> None:
        """Columns t,x,y,z,vx,vy,vz in SI units."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "z", "vx", "vy", "vz"])
            for i in range(len(self.t)):
                w.writerow([f"{v:.12g}" for v in (self.t[i], self.x[i],
                                                  self.y[i], self.z[i],
                                                  self.vx[i], self.vy[i],
                                                  self.vz[i])])


@dataclass(frozen=True)
class StabilityMap:
    """Grid of stability verdicts over drive parameters (a_x, q_x).

    verdict: 1 stable, 0 unstable/escaped, -1 unknown.  beta_x/beta_y are
    filled by the continued-fraction method (NaN where unstable or not
    computed); eta is the adiabaticity parameter at the electrode radius.
    """

    a_values: np.ndarray
    q_values: np.ndarray
    verdict: np.ndarray
    beta_x: np.ndarray
    beta_y: np.ndarray
    eta: np.ndarray
    method: str

    def stable_fraction(self) -> float:
        done = self.verdict >= 0
        return float(np.sum(self.verdict == 1) / max(np.sum(done), 1))


def _drive_coefficient(trap: LinearTrap, ion: IonSpecies):
    """(static, rf) parts of F_k(t) = static - rf cos(Omega t + phase)."""
    c = trap.k * ion.charge / (2.0 * ion.mass * trap.r0 ** 2)
    return c * trap.us, c * trap.v0


def _axial_pull(trap: LinearTrap, ion: IonSpecies):
    if trap.axial is None or trap.axial.vend == 0.0:
        return 0.0
    ax = trap.axial
    return ion.charge * ax.kappa * ax.vend / (ion.mass * ax.z0 ** 2)


def _rf_rhs(trap: LinearTrap, ion: IonSpecies, rf_phase: float):
    k = trap.k
    r0 = trap.r0
    f_static, f_rf = _drive_coefficient(trap, ion)
    omega = trap.omega
    pull = _axial_pull(trap, ion)

    def rhs(t, s):
        x, y, z, vx, vy, vz = s
        fk = f_static - f_rf * math.cos(omega * t + rf_phase)
        w = complex(x, y) ** (k - 1)
        scale = fk / r0 ** (k - 2)
        ax = scale * w.real + pull * x
        ay = -scale * w.imag + pull * y
        az = -2.0 * pull * z
        return (vx, vy, vz, ax, ay, az)

    return rhs


def _secular_rhs(trap: LinearTrap, ion: IonSpecies):
    m = ion.mass

    def rhs(t, s):
        x, y, z, vx, vy, vz = s
        fx, fy, fz = pseudopotential_force(trap, ion, x, y, z)
        return (vx, vy, vz, fx / m, fy / m, fz / m)

    return rhs


def _integrate(trap, ion, init, duration, rhs, kind, rel_tol,
               samples_per_period):
    if duration <= 0:
        raise ValueError("duration must be > 0")
    if math.hypot(init.x, init.y) >= trap.r0:
        raise ValueError("initial position outside the trap radius")

    t_rf = trap.rf_period
    atol_pos = 1e-12 * trap.r0
    atol = [atol_pos] * 3 + [atol_pos * trap.omega] * 3

    def escape(t, s):
        return s[0] ** 2 + s[1] ** 2 - trap.r0 ** 2
    escape.terminal = True
    escape.direction = 1

    y0 = (init.x, init.y, init.z, init.vx, init.vy, init.vz)
    max_step = t_rf / 4.0 if kind == "rf" else duration / 64.0
    sol = solve_ivp(rhs, (init.t, init.t + duration), y0, method="RK45",
                    rtol=rel_tol, atol=atol, dense_output=True,
                    events=escape, max_step=max_step)
    if sol.status == -1:
        raise StepUnderflowError(f"step underflow: {sol.message}")

    escaped = len(sol.t_events[0]) > 0
    t_end = sol.t_events[0][0] if escaped else init.t + duration

    dt = t_rf / samples_per_period
    n = max(int(math.floor((t_end - init.t) / dt)) + 1, 2)
    t = init.t + dt * np.arange(n)
    t[-1] = min(t[-1], t_end)
    states = sol.sol(t)
    return Trajectory(t=t, x=states[0], y=states[1], z=states[2],
                      vx=states[3], vy=states[4], vz=states[5],
                      trap=trap, ion=ion, dt_sample=dt, kind=kind,
                      escaped=escaped,
                      escape_time=float(t_end) if escaped else None)


def integrate_rf(trap: LinearTrap, ion: IonSpecies, init: PhaseState,
                 duration: float, rel_tol: float = 1e-9,
                 samples_per_period: int = 32,
                 rf_phase: float = 0.0) -> Trajectory:
    """Integrate the full RF equations of motion for `duration` seconds.

    Adaptive embedded Runge-Kutta (5th/4th) with dense output, resampled
    uniformly at samples_per_period per RF cycle.  A trajectory touching
    r = r0 is truncated there and flagged escaped.
    """
    rhs = _rf_rhs(trap, ion, rf_phase)
    return _integrate(trap, ion, init, duration, rhs, "rf", rel_tol,
                      samples_per_period)


def integrate_secular(trap: LinearTrap, ion: IonSpecies, init: PhaseState,
                      duration: float, rel_tol: float = 1e-9,
                      samples_per_period: int = 32) -> Trajectory:
    """Integrate motion in the static effective potential (no micromotion)."""
    rhs = _secular_rhs(trap, ion)
    return _integrate(trap, ion, init, duration, rhs, "secular", rel_tol,
                      samples_per_period)


def micromotion_amplitude(trap: LinearTrap, ion: IonSpecies,
                          position) -> np.ndarray:
    """Driven-oscillation amplitude vector q E0(R0) / (m Omega^2) [m].

    Grows as r^(k-1); identically zero on the trap axis, which is why the
    axis is the only micromotion-free location.
    """
    x, y = float(position[0]), float(position[1])
    if math.hypot(x, y) >= trap.r0:
        raise ValueError("position outside the trap radius")
    e0x, e0y = rf_field_amplitude(trap, x, y)
    s = abs(ion.charge) / (ion.mass * trap.omega ** 2)
    return np.array([s * e0x, s * e0y, 0.0])


# --- spectra ------------------------------------------------------------------

def motional_spectrum(traj: Trajectory, component: str = "x"):
    """One-sided power spectrum of a trajectory component.

    Hann-windowed rfft of the uniformly sampled data; returns
    (frequency_hz, power) with power normalised to the window.  Requires
    at least 50 RF periods of data at 16+ samples per RF period.
    """
    n_periods = (traj.t[-1] - traj.t[0]) / traj.trap.rf_period
    if n_periods < 50.0 - 1e-9:
        raise TooShortError(
            f"too short: {n_periods:.1f} RF periods sampled, need >= 50")
    if traj.samples_per_rf_period < 16.0 - 1e-9:
        raise TooShortError(
            f"too short: {traj.samples_per_rf_period:.1f} samples per RF "
            "period, need >= 16")
    data = getattr(traj, component)
    w = np.hanning(len(data))
    amp = np.abs(np.fft.rfft(data * w)) / np.sum(w) * 2.0
    freq = np.fft.rfftfreq(len(data), traj.dt_sample)
    return freq, amp ** 2


def _refine_peak(freq, power, i):
    """Quadratic interpolation around bin i: (frequency, amplitude)."""
    if not 0 < i < len(power) - 1 or power[i] <= 0:
        return freq[i], math.sqrt(max(power[i], 0.0))
    y1, y2, y3 = power[i - 1], power[i], power[i + 1]
    denom = y1 - 2.0 * y2 + y3
    shift = 0.0 if denom == 0 else 0.5 * (y1 - y3) / denom
    shift = min(max(shift, -0.5), 0.5)
    a1, a2, a3 = map(math.sqrt, (y1, y2, y3))
    amp = a2 - 0.25 * (a1 - a3) * shift
    return freq[i] + shift * (freq[1] - freq[0]), amp


def dominant_frequency(freq, power, fmin: float = 0.0,
                       fmax: Optional[float] = None):
    """Location and amplitude of the strongest peak in [fmin, fmax]."""
    mask = freq >= fmin
    if fmax is not None:
        mask &= freq <= fmax
    idx = np.nonzero(mask)[0]
    if len(idx) == 0:
        raise ValueError("empty frequency band")
    i = idx[np.argmax(power[idx])]
    return _refine_peak(freq, power, int(i))


def peak_near(freq, power, f_target: float, halfwidth: float):
    """Strongest peak within +-halfwidth of f_target."""
    return dominant_frequency(freq, power, f_target - halfwidth,
                              f_target + halfwidth)


# --- secular energy -----------------------------------------------------------

def secular_energy_series(traj: Trajectory):
    """RF-period-averaged secular energy along an RF trajectory.

    The state is low-passed with two passes of a one-RF-period moving
    average (a single pass leaves an O(q/2) velocity sideband leak); the
    secular energy is the averaged kinetic term plus the effective
    potential at the averaged position.  Returns (t, E) trimmed of the
    filter edges.
    """
    n = int(round(traj.samples_per_rf_period))
    if len(traj.t) < 5 * n:
        raise TooShortError("too short for RF-period averaging")
    kernel = np.ones(n) / n

    def smooth(a):
        once = np.convolve(a, kernel, mode="valid")
        return np.convolve(once, kernel, mode="valid")

    xs, ys, zs = smooth(traj.x), smooth(traj.y), smooth(traj.z)
    vxs, vys, vzs = smooth(traj.vx), smooth(traj.vy), smooth(traj.vz)
    m = traj.ion.mass
    e = np.empty(len(xs))
    for i in range(len(xs)):
        ke = 0.5 * m * (vxs[i] ** 2 + vys[i] ** 2 + vzs[i] ** 2)
        r = math.hypot(xs[i], ys[i])
        theta = math.atan2(ys[i], xs[i])
        e[i] = ke + pseudopotential(traj.trap, traj.ion, r, theta, zs[i])
    t = traj.t[: len(xs)] + (n - 1) * traj.dt_sample
    return t, e


# --- stability scanning -------------------------------------------------------

def _voltages_from_aq(trap: LinearTrap, ion: IonSpecies, a: float, q: float):
    """Rod voltages realising drive parameters (a, q) in this trap."""
    denom = ion.mass * trap.omega ** 2 * trap.r0 ** 2
    v0 = q * denom / (2.0 * ion.charge)
    us = -a * denom / (4.0 * ion.charge)
    return us, v0


def stability_scan(trap: LinearTrap, ion: IonSpecies, a_values, q_values,
                   method: str = "continued-fraction",
                   n_periods: int = 1000,
                   steps_per_period: int = 64) -> StabilityMap:
    """Map the lowest stability region over a rectangle of (a_x, q_x).

    continued-fraction: quadrupole only; a cell is stable when the
    characteristic exponent exists in [0, 1] on both transverse axes.
    trajectory: any k; each cell is integrated (fixed-step RK4, batched
    over the grid) for n_periods RF cycles from rest at r = r0/10 on the
    diagonal, zero RF phase, and counted stable if it never reaches r0.
    """
    a_values = np.asarray(a_values, dtype=float)
    q_values = np.asarray(q_values, dtype=float)
    shape = (len(a_values), len(q_values))
    beta_x = np.full(shape, np.nan)
    beta_y = np.full(shape, np.nan)
    eta = np.empty(shape)
    for j, q in enumerate(q_values):
        # eta at the electrode radius; for k = 2 this is |q_x| everywhere
        us, v0 = _voltages_from_aq(trap, ion, 0.0, q)
        probe = LinearTrap(k=trap.k, r0=trap.r0, v0=abs(v0), omega=trap.omega)
        eta[:, j] = adiabaticity(probe, ion, trap.r0)

    if method == "continued-fraction":
        if trap.k != 2:
            raise ValueError("continued-fraction scan is quadrupole-only")
        verdict = np.zeros(shape, dtype=np.int8)
        for i, a in enumerate(a_values):
            for j, q in enumerate(q_values):
                try:
                    bx = beta_from_aq(a, q)
                    by = beta_from_aq(-a, -q)
                except UnstablePointError:
                    continue
                beta_x[i, j] = bx
                beta_y[i, j] = by
                verdict[i, j] = 1
        return StabilityMap(a_values=a_values, q_values=q_values,
                            verdict=verdict, beta_x=beta_x, beta_y=beta_y,
                            eta=eta, method=method)

    if method != "trajectory":
        raise ValueError(f"unknown method {method!r}")
    verdict = _trajectory_scan(trap, ion, a_values, q_values, n_periods,
                               steps_per_period)
    return StabilityMap(a_values=a_values, q_values=q_values, verdict=verdict,
                        beta_x=beta_x, beta_y=beta_y, eta=eta, method=method)


def _trajectory_scan(trap, ion, a_values, q_values, n_periods,
                     steps_per_period):
    """Batched fixed-step RK4 escape test over the whole (a, q) grid."""
    A, Q = np.meshgrid(a_values, q_values, indexing="ij")
    denom = ion.mass * trap.omega ** 2 * trap.r0 ** 2
    v0 = Q.ravel() * denom / (2.0 * ion.charge)
    us = -A.ravel() * denom / (4.0 * ion.charge)

    k = trap.k
    r0 = trap.r0
    omega = trap.omega
    c = k * ion.charge / (2.0 * ion.mass * r0 ** 2)
    f_static = c * us
    f_rf = c * v0

    x = np.full(v0.shape, r0 / 10.0 / math.sqrt(2.0))
    y = np.full(v0.shape, r0 / 10.0 / math.sqrt(2.0))
    vx = np.zeros_like(x)
    vy = np.zeros_like(x)
    alive = np.ones(v0.shape, dtype=bool)

    def acc(t, x, y):
        fk = f_static - f_rf * np.cos(omega * t)
        w = (x + 1j * y) ** (k - 1)
        scale = fk / r0 ** (k - 2)
        return scale * w.real, -scale * w.imag

    dt = trap.rf_period / steps_per_period
    t = 0.0
    r0sq = r0 * r0
    for _ in range(n_periods * steps_per_period):
        ax1, ay1 = acc(t, x, y)
        x2 = x + 0.5 * dt * vx
        y2 = y + 0.5 * dt * vy
        vx2 = vx + 0.5 * dt * ax1
        vy2 = vy + 0.5 * dt * ay1
        ax2, ay2 = acc(t + 0.5 * dt, x2, y2)
        x3 = x + 0.5 * dt * vx2
        y3 = y + 0.5 * dt * vy2
        vx3 = vx + 0.5 * dt * ax2
        vy3 = vy + 0.5 * dt * ay2
        ax3, ay3 = acc(t + 0.5 * dt, x3, y3)
        x4 = x + dt * vx3
        y4 = y + dt * vy3
        vx4 = vx + dt * ax3
        vy4 = vy + dt * ay3
        ax4, ay4 = acc(t + dt, x4, y4)
        x = x + dt / 6.0 * (vx + 2.0 * vx2 + 2.0 * vx3 + vx4)
        y = y + dt / 6.0 * (vy + 2.0 * vy2 + 2.0 * vy3 + vy4)
        vx = vx + dt / 6.0 * (ax1 + 2.0 * ax2 + 2.0 * ax3 + ax4)
        vy = vy + dt / 6.0 * (ay1 + 2.0 * ay2 + 2.0 * ay3 + ay4)
        t += dt
        escaped = x * x + y * y >= r0sq
        newly = escaped & alive
        if np.any(newly):
            alive &= ~escaped
            x = np.where(alive, x, 0.0)
            y = np.where(alive, y, 0.0)
            vx = np.where(alive, vx, 0.0)
            vy = np.where(alive, vy, 0.0)
        if not np.any(alive):
            break

    return alive.astype(np.int8).reshape(len(a_values), len(q_values))
