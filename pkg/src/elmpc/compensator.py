"""Feedforward PID compensator driven by the estimated predictive error."""

from dataclasses import dataclass

from .errors import InvalidInputError


@dataclass(frozen=True)
class PidConfig:
    Kp: float = 0.3  # rad/m
    Ki: float = 0.0  # rad/(m s)
    Kd: float = 0.0  # rad s/m
    integral_clamp: float = 1.0  # m s
    output_clamp: float = 0.44  # rad

    def __post_init__(self):
        if not (self.integral_clamp > 0 and self.output_clamp > 0):
            raise InvalidInputError("clamps must be > 0")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0


def _clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


def pid_step(state, e_hat, dt, config):
    """Return ``(u_c, new_state)``; the integral is trapezoidal and clamped."""
    if not dt > 0:
        raise InvalidInputError("dt must be > 0")
    integral = state.integral + 0.5 * (state.prev_error + e_hat) * dt
    integral = _clamp(integral, -config.integral_clamp, config.integral_clamp)
    derivative = (e_hat - state.prev_error) / dt
    u = config.Kp * e_hat + config.Ki * integral + config.Kd * derivative
    u = _clamp(u, -config.output_clamp, config.output_clamp)
    return u, PidState(integral, e_hat)


def combine(u_m, u_c, u_min, u_max):
    """Applied steering: MPC output plus compensation, saturated to the actuator range."""
    if not u_min < u_max:
        raise InvalidInputError("u_min must be < u_max")
    return _clamp(u_m + u_c, u_min, u_max)
