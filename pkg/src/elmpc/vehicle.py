"""Planar 3-DOF bicycle model with linear or saturating lateral tire forces.

State vector order used by the array helpers is ``[X, Y, phi, vx, vy, r]``.
Forces follow the two-tires-per-axle convention: every ``C * alpha`` product
enters the equations of motion multiplied by 2.
"""

import math
from dataclasses import dataclass, fields, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, InvalidInputError, InvalidPerturbationError

GRAVITY = 9.81
SATURATING_SHAPE = 1.5

LINEAR = "linear"
SATURATING = "saturating"
TIRE_MODELS = (LINEAR, SATURATING)


@dataclass(frozen=True)
class VehicleParams:
    m: float = 1500.0  # kg
    Iz: float = 2500.0  # kg m^2
    a: float = 1.2  # CG to front axle (m)
    b: float = 1.4  # CG to rear axle (m)
    Clf: float = 80000.0  # N per unit slip
    Clr: float = 80000.0
    Ccf: float = 70000.0  # N/rad
    Ccr: float = 70000.0
    tire_model: str = LINEAR
    mu: float = 0.9

    def __post_init__(self):
        for f in fields(self):
            if f.name == "tire_model":
                continue
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidInputError(f"{f.name} must be a finite number, got {v!r}")
        if self.tire_model not in TIRE_MODELS:
            raise InvalidInputError(f"unknown tire_model {self.tire_model!r}")
        for name in ("m", "Iz", "a", "b", "Clf", "Clr", "Ccf", "Ccr"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be > 0")
        if not 0 < self.mu <= 1.5:
            raise InvalidInputError("mu must lie in (0, 1.5]")

    @property
    def wheelbase(self):
        return self.a + self.b

    @property
    def fz_front(self):
        """Static front axle load (N)."""
        return self.m * GRAVITY * self.b / self.wheelbase

    @property
    def fz_rear(self):
        return self.m * GRAVITY * self.a / self.wheelbase


@dataclass(frozen=True)
class VehicleState:
    X: float = 0.0
    Y: float = 0.0
    phi: float = 0.0
    vx: float = 20.0
    vy: float = 0.0
    r: float = 0.0

    def as_array(self):
        return np.array([self.X, self.Y, self.phi, self.vx, self.vy, self.r])

    @classmethod
    def from_array(cls, x):
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class TireSlip:
    alpha_f: float
    alpha_r: float
    s_f: float = 0.0
    s_r: float = 0.0


class StateDerivative(NamedTuple):
    dX: float
    dY: float
    dphi: float
    dvx: float
    dvy: float
    dr: float


@dataclass(frozen=True)
class Perturbation:
    cg_shift: float = 0.0
    mass_scale: float = 1.0
    stiffness_scale: float = 1.0
    tire_model_override: Optional[str] = None


def linear_tire_force(stiffness, slip):
    """Linear tire: ``F = C * slip`` (lateral with alpha, longitudinal with s)."""
    if not (math.isfinite(stiffness) and math.isfinite(slip)):
        raise InvalidInputError("tire force inputs must be finite")
    if stiffness <= 0:
        raise InvalidInputError("stiffness must be > 0")
    return stiffness * slip


def _saturating(stiffness, fz, mu, alpha):
    d = mu * fz
    bs = stiffness / (SATURATING_SHAPE * d)
    return d * math.sin(SATURATING_SHAPE * math.atan(bs * alpha))


def saturating_tire_lateral_force(params, axle, alpha):
    """Magic-formula-shaped lateral force ``D sin(Cs atan(Bs alpha))``.

    ``D = mu * fz_axle`` and ``Bs`` is chosen so the slope at zero slip equals
    the axle's cornering stiffness. The result is odd in ``alpha`` and bounded
    by ``D``.
    """
    if not math.isfinite(alpha):
        raise InvalidInputError("alpha must be finite")
    if axle == "front":
        return _saturating(params.Ccf, params.fz_front, params.mu, alpha)
    if axle == "rear":
        return _saturating(params.Ccr, params.fz_rear, params.mu, alpha)
    raise InvalidInputError(f"axle must be 'front' or 'rear', got {axle!r}")


def slip_quantities(state, delta, params):
    if not state.vx > 0:
        raise DomainError(f"vx must be > 0, got {state.vx}")
    alpha_f = delta - (state.vy + params.a * state.r) / state.vx
    alpha_r = (params.b * state.r - state.vy) / state.vx
    return TireSlip(alpha_f, alpha_r, 0.0, 0.0)


def rhs_array(x, delta, params, small_angle=False):
    """Time derivative of ``[X, Y, phi, vx, vy, r]`` as a numpy array.

    With ``small_angle`` the kinematic rows use ``sin(phi) ~ phi`` and
    ``cos(phi) ~ 1``; this is the controller's view of the world and is only
    used by the plant in matched-model mode.
    """
    _, _, phi, vx, vy, r = x
    if not vx > 0:
        raise DomainError(f"vx must be > 0, got {vx}")
    p = params
    alpha_f = delta - (vy + p.a * r) / vx
    alpha_r = (p.b * r - vy) / vx
    if p.tire_model == LINEAR:
        ff = p.Ccf * alpha_f
        fr = p.Ccr * alpha_r
    else:
        ff = _saturating(p.Ccf, p.fz_front, p.mu, alpha_f)
        fr = _saturating(p.Ccr, p.fz_rear, p.mu, alpha_r)
    # longitudinal slip is zero at constant speed, so Clf*s_f and Clr*s_r drop out
    dvy = -vx * r + 2.0 * (ff + fr) / p.m
    dvx = vy * r + 2.0 * (ff * delta) / p.m
    dr = 2.0 * (p.a * ff - p.b * fr) / p.Iz
    if small_angle:
        dY = vx * phi + vy
        dX = vx - vy * phi
    else:
        s, c = math.sin(phi), math.cos(phi)
        dY = vx * s + vy * c
        dX = vx * c - vy * s
    return np.array([dX, dY, r, dvx, dvy, dr])


def dynamics_rhs(state, delta, params, small_angle=False):
    return StateDerivative(*(float(v) for v in rhs_array(state.as_array(), delta, params, small_angle)))


def integrate(x, delta, params, dt, method="rk4", small_angle=False):
    """One fixed step on the array representation."""
    if dt < 0:
        raise InvalidInputError("dt must be >= 0")
    if dt == 0:
        return np.array(x, dtype=float)
    if method == "euler":
        return x + dt * rhs_array(x, delta, params, small_angle)
    if method == "rk4":
        k1 = rhs_array(x, delta, params, small_angle)
        k2 = rhs_array(x + 0.5 * dt * k1, delta, params, small_angle)
        k3 = rhs_array(x + 0.5 * dt * k2, delta, params, small_angle)
        k4 = rhs_array(x + dt * k3, delta, params, small_angle)
        return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise InvalidInputError(f"unknown integration method {method!r}")


def step(state, delta, params, dt, method="rk4", small_angle=False):
    return VehicleState.from_array(integrate(state.as_array(), delta, params, dt, method, small_angle))


def perturb_params(nominal, perturbation):
    """Apply a plant/controller mismatch to nominal parameters.

    The CG shift moves the CG rearwards for positive values while keeping the
    wheelbase fixed; axle loads follow automatically.
    """
    p = perturbation
    tire = p.tire_model_override if p.tire_model_override is not None else nominal.tire_model
    try:
        return replace(
            nominal,
            a=nominal.a + p.cg_shift,
            b=nominal.b - p.cg_shift,
            m=nominal.m * p.mass_scale,
            Clf=nominal.Clf * p.stiffness_scale,
            Clr=nominal.Clr * p.stiffness_scale,
            Ccf=nominal.Ccf * p.stiffness_scale,
            Ccr=nominal.Ccr * p.stiffness_scale,
            tire_model=tire,
        )
    except InvalidInputError as exc:
        raise InvalidPerturbationError(str(exc)) from exc
