"""Discrete augmented LTV model of the controller's reduced lateral dynamics.

The controller works on ``x = [vy, phi, r, Y]`` with the longitudinal speed
frozen, the linear tire and small-angle kinematics. Tracked outputs are
``y = [phi, Y]``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError

N_STATE = 4
N_INPUT = 1
OUTPUT_MATRIX = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class LinearModel:
    A_cont: np.ndarray
    B_cont: np.ndarray
    A_disc: np.ndarray
    B_disc: np.ndarray
    dt: float

    @property
    def n(self):
        return self.A_cont.shape[0]

    @property
    def m(self):
        return self.B_cont.shape[1]


@dataclass(frozen=True)
class AugmentedModel:
    A_aug: np.ndarray
    B_aug: np.ndarray
    C_aug: np.ndarray

    def xi(self, x, u_prev):
        return np.concatenate([np.asarray(x, dtype=float), np.atleast_1d(float(u_prev))])


def controller_state(state):
    return np.array([state.vy, state.phi, state.r, state.Y])


def jacobians(op_state, op_input, params, vx):
    """Analytic Jacobians of the reduced dynamics.

    The reduced model is linear in ``(x, u)`` once ``vx`` is frozen, so the
    operating point only enters through ``vx``; ``op_state`` and
    ``op_input`` are accepted for interface symmetry.
    """
    if not vx > 0:
        raise DomainError(f"vx must be > 0, got {vx}")
    m, Iz, a, b = params.m, params.Iz, params.a, params.b
    cf, cr = params.Ccf, params.Ccr
    A = np.zeros((N_STATE, N_STATE))
    A[0, 0] = -2.0 * (cf + cr) / (m * vx)
    A[0, 2] = -vx + 2.0 * (b * cr - a * cf) / (m * vx)
    A[1, 2] = 1.0
    A[2, 0] = 2.0 * (b * cr - a * cf) / (Iz * vx)
    A[2, 2] = -2.0 * (a * a * cf + b * b * cr) / (Iz * vx)
    A[3, 0] = 1.0
    A[3, 1] = vx
    B = np.zeros((N_STATE, N_INPUT))
    B[0, 0] = 2.0 * cf / m
    B[2, 0] = 2.0 * a * cf / Iz
    return A, B


def discretize(A_cont, B_cont, dt):
    """Forward-Euler discretization: ``A = I + dt*Ac``, ``B = dt*Bc``."""
    A_cont = np.asarray(A_cont, dtype=float)
    B_cont = np.asarray(B_cont, dtype=float)
    return np.eye(A_cont.shape[0]) + dt * A_cont, dt * B_cont


def linearize(state, u_prev, params, dt):
    A_c, B_c = jacobians(controller_state(state), u_prev, params, state.vx)
    A_d, B_d = discretize(A_c, B_c, dt)
    return LinearModel(A_c, B_c, A_d, B_d, dt)


def augment(A_disc, B_disc, C=OUTPUT_MATRIX):
    A = np.atleast_2d(np.asarray(A_disc, dtype=float))
    B = np.asarray(B_disc, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
        raise InvalidInputError(f"inconsistent shapes A{A.shape} B{B.shape} C{C.shape}")
    m = B.shape[1]
    A_aug = np.block([[A, B], [np.zeros((m, n)), np.eye(m)]])
    B_aug = np.vstack([B, np.eye(m)])
    C_aug = np.hstack([C, np.zeros((C.shape[0], m))])
    return AugmentedModel(A_aug, B_aug, C_aug)
