"""Classical dynamics of the charged condensate pointer inside a pin.

The pointer is driven along the tubule axis by a constant Coulomb force and
braked by collisions with the surrounding bulk, linear (d=1) or quadratic
(d=2) in velocity:

    dV/dt = a_C - k_d * V**d

All quantities are SI: positions in m, velocities in m/s, times in s.
``k_d`` is 1/s for d=1 and 1/m for d=2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    ConfigurationError,
    NoRelaxationScaleError,
    PinCannotFireError,
    StepTooCoarseError,
)

#: Resonant wavelength of the two-level rotational transition of a bound
#: water molecule; the tubule diameter must stay below it.
RESONANT_WAVELENGTH_M = 400e-6

#: Macroscopic condensate radius at room temperature.
BEC_RADIUS_M = 25e-6

ROOM_TEMPERATURE_K = 300.0

#: Residual after five relaxation times is e**-5 (~0.7%) for d=1; we call
#: the pointer settled from there on.
SETTLE_RELAXATION_TIMES = 5.0


@dataclass(frozen=True)
class PhysicsParams:
    """Electrical and mechanical parameters of one pin's pointer.

    e_star/m_star are the effective charge [C] and mass [kg] of the
    condensed boson, u0 the applied potential magnitude [V], l_r the run
    length of the potential slope [m].  The damping exponent d selects the
    collision law; k_d is the damping constant in the matching units.
    e_star, m_star, u0, l_r and k_d have no canonical values and default to
    dimensionless-friendly 1.0 placeholders; every report echoes the set
    actually used.
    """

    e_star: float = 1.0
    m_star: float = 1.0
    u0: float = 1.0
    l_r: float = 1.0
    d: int = 1
    k_d: float = 1.0
    tube_diameter: float = 100e-6
    resonant_wavelength: float = RESONANT_WAVELENGTH_M
    bec_radius: float = BEC_RADIUS_M
    temperature: float = ROOM_TEMPERATURE_K

    def __post_init__(self):
        if self.e_star <= 0:
            raise ConfigurationError(f"e_star must be positive, got {self.e_star}")
        if self.m_star <= 0:
            raise ConfigurationError(f"m_star must be positive, got {self.m_star}")
        if self.l_r <= 0:
            raise ConfigurationError(f"l_r must be positive, got {self.l_r}")
        if self.k_d <= 0:
            raise ConfigurationError(f"k_d must be positive, got {self.k_d}")
        if self.d not in (1, 2):
            raise ConfigurationError(f"damping exponent d must be 1 or 2, got {self.d}")
        if self.u0 < 0:
            raise ConfigurationError(f"u0 must be non-negative, got {self.u0}")
        if self.tube_diameter <= 0:
            raise ConfigurationError(
                f"tube_diameter must be positive, got {self.tube_diameter}"
            )
        if self.tube_diameter >= self.resonant_wavelength:
            raise ConfigurationError(
                f"tube_diameter {self.tube_diameter} m must stay below the "
                f"resonant wavelength {self.resonant_wavelength} m"
            )


@dataclass(frozen=True)
class PointerKinematics:
    """Derived drive/relaxation bundle: all zero when the pin is undriven."""

    a_c: float
    tau_d: float
    v_terminal: float


def coulomb_acceleration(p: PhysicsParams) -> float:
    """Acceleration e_star*u0/(m_star*l_r) of the condensed boson [m/s^2]."""
    return p.e_star * p.u0 / (p.m_star * p.l_r)


def relaxation_time(p: PhysicsParams) -> float:
    """Collision relaxation time: 1/k_1 for d=1, 1/sqrt(a_C*k_2) for d=2.

    Raises NoRelaxationScaleError for d=2 with zero drive, where the pointer
    never accelerates and the scale is undefined.
    """
    if p.d == 1:
        return 1.0 / p.k_d
    a_c = coulomb_acceleration(p)
    if a_c == 0.0:
        raise NoRelaxationScaleError(
            "d=2 with u0=0 has no relaxation scale (pointer never accelerates)"
        )
    return 1.0 / math.sqrt(a_c * p.k_d)


def terminal_velocity(p: PhysicsParams) -> float:
    """Steady pointer speed (a_C/k_d)**(1/d); 0 exactly for zero drive."""
    a_c = coulomb_acceleration(p)
    if a_c == 0.0:
        return 0.0
    if p.d == 1:
        return a_c / p.k_d
    return math.sqrt(a_c / p.k_d)


def kinematics(p: PhysicsParams) -> PointerKinematics:
    """Bundle (a_C, tau_d, v_terminal); the undriven pin reports all zeros."""
    if p.u0 == 0.0:
        return PointerKinematics(0.0, 0.0, 0.0)
    return PointerKinematics(
        a_c=coulomb_acceleration(p),
        tau_d=relaxation_time(p),
        v_terminal=terminal_velocity(p),
    )


def _stability_scale(p: PhysicsParams, v0: float) -> float:
    """Fastest time scale of dV/dt = a_C - k_d V^d near the start point.

    Used only to guard the integration step.  Returns 0 when there are no
    dynamics at all (zero drive, zero start velocity).
    """
    if p.d == 1:
        return 1.0 / p.k_d
    a_c = coulomb_acceleration(p)
    if a_c > 0.0:
        tau = 1.0 / math.sqrt(a_c * p.k_d)
        if v0 > terminal_velocity(p):
            # overshoot branch decays on 1/(k2*v0), which may be faster
            return min(tau, 1.0 / (p.k_d * v0))
        return tau
    if v0 > 0.0:
        return 1.0 / (p.k_d * v0)
    return 0.0


def integrate_velocity(p: PhysicsParams, v0: float, t: float, dt: float) -> float:
    """Integrate the pointer velocity from v0 over duration t.

    Fixed-step classical 4th-order scheme; deterministic.  The step must
    resolve the relaxation scale (dt < tau/10) or StepTooCoarseError is
    raised.  For d=2 a start above the terminal velocity is supported (the
    solution decays on a coth-type branch) but converges from above.
    """
    if t < 0:
        raise ConfigurationError(f"t must be non-negative, got {t}")
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if v0 < 0:
        raise ConfigurationError(f"v0 must be non-negative, got {v0}")
    if t == 0.0:
        return v0

    a_c = coulomb_acceleration(p)
    k, d = p.k_d, p.d
    scale = _stability_scale(p, v0)
    if scale == 0.0:
        # a_C = 0 and v0 = 0: the velocity is identically zero
        return 0.0
    if dt >= scale / 10.0:
        raise StepTooCoarseError(
            f"dt={dt} too coarse for relaxation scale {scale} (need dt < scale/10)"
        )

    if d == 1:
        def deriv(v: float) -> float:
            return a_c - k * v
    else:
        def deriv(v: float) -> float:
            return a_c - k * v * v

    n_steps = int(math.floor(t / dt + 1e-9))
    remainder = t - n_steps * dt
    v = v0
    for _ in range(n_steps):
        k1 = deriv(v)
        k2 = deriv(v + 0.5 * dt * k1)
        k3 = deriv(v + 0.5 * dt * k2)
        k4 = deriv(v + dt * k3)
        v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if remainder > dt * 1e-9:
        h = remainder
        k1 = deriv(v)
        k2 = deriv(v + 0.5 * h * k1)
        k3 = deriv(v + 0.5 * h * k2)
        k4 = deriv(v + h * k3)
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


def latency_from_kinematics(
    v_terminal: float, tau_d: float, sigma_q: float, eta: float, t_cycle: float
) -> int:
    """Cycle count for one event reading given precomputed kinematics.

    Settle time of SETTLE_RELAXATION_TIMES*tau plus the time for the branch
    separation v_terminal*t to exceed eta*sigma_q, rounded up to whole
    machine cycles.
    """
    if sigma_q <= 0:
        raise ConfigurationError(f"sigma_q must be positive, got {sigma_q}")
    if eta <= 0:
        raise ConfigurationError(f"eta must be positive, got {eta}")
    if t_cycle <= 0:
        raise ConfigurationError(f"t_cycle must be positive, got {t_cycle}")
    if v_terminal <= 0:
        raise PinCannotFireError(
            "pin cannot fire: zero terminal velocity (no potential applied)"
        )
    seconds = SETTLE_RELAXATION_TIMES * tau_d + eta * sigma_q / v_terminal
    return int(math.ceil(seconds / t_cycle))


def readout_latency(
    p: PhysicsParams, sigma_q: float, eta: float, t_cycle: float
) -> int:
    """Cycles until a pin driven with these parameters becomes readable."""
    lam = terminal_velocity(p)
    if lam <= 0:
        raise PinCannotFireError(
            "pin cannot fire: zero terminal velocity (no potential applied)"
        )
    return latency_from_kinematics(lam, relaxation_time(p), sigma_q, eta, t_cycle)


def kinematics_json(
    p: PhysicsParams, sigma_q: float, eta: float, t_cycle: float
) -> dict:
    """Exportable kinematics record; latency is null when the pin cannot fire."""
    kin = kinematics(p)
    try:
        latency = latency_from_kinematics(kin.v_terminal, kin.tau_d, sigma_q, eta, t_cycle)
    except PinCannotFireError:
        latency = None
    return {
        "a_C": kin.a_c,
        "tau_d": kin.tau_d,
        "lambda": kin.v_terminal,
        "latency_cycles": latency,
    }
