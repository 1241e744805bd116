"""Linear time-varying MPC on the augmented increment model."""

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import linearization as lin
from .errors import ElmpcError, InvalidInputError
from .qp import QpProblem, solve_qp


@dataclass(frozen=True)
class MpcConfig:
    Np: int
    Nc: int
    Q: np.ndarray
    R: np.ndarray
    dt: float
    du_min: float
    du_max: float
    u_min: float
    u_max: float
    max_iter: int = 500
    tol: float = 1e-8

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape[0] == 1 and Q.shape[1] > 1:
            Q = np.diag(Q[0])
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        if not (int(self.Np) == self.Np and int(self.Nc) == self.Nc and self.Np >= self.Nc >= 1):
            raise InvalidInputError("need integer horizons with Np >= Nc >= 1")
        if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() < -1e-12:
            raise InvalidInputError("Q must be symmetric positive semidefinite")
        if not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() <= 0:
            raise InvalidInputError("R must be symmetric positive definite")
        if not self.dt > 0:
            raise InvalidInputError("dt must be > 0")
        if not (self.du_min < self.du_max and self.u_min < self.u_max):
            raise InvalidInputError("bounds must satisfy min < max")


class Prediction(NamedTuple):
    Xp: float
    Yp: float
    phi_p: float


@dataclass
class ControllerState:
    u_prev: float = 0.0
    last_solution: Optional[np.ndarray] = field(default=None, repr=False)
    prediction: Optional[Prediction] = None
    status: str = "init"


def build_prediction(model, Np, Nc):
    """Stacked output prediction ``Y = Psi xi + Theta dU`` over ``Np`` steps."""
    A, B, C = model.A_aug, model.B_aug, model.C_aug
    if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0] or C.shape[1] != A.shape[0]:
        raise InvalidInputError("inconsistent augmented model shapes")
    nx, m = B.shape
    p = C.shape[0]
    Psi = np.zeros((Np * p, nx))
    Theta = np.zeros((Np * p, Nc * m))
    # CA^k B for k = 0..Np-1
    markov = []
    Ak = np.eye(nx)
    for i in range(Np):
        markov.append(C @ Ak @ B)
        Ak = Ak @ A
        Psi[i * p:(i + 1) * p] = C @ Ak
    for i in range(Np):
        for j in range(min(i + 1, Nc)):
            Theta[i * p:(i + 1) * p, j * m:(j + 1) * m] = markov[i - j]
    return Psi, Theta


def assemble_qp(prediction, xi, ref_stack, config):
    """Quadratic program for the increment sequence.

    The cost is the output tracking error over ``Np`` steps plus the
    increment effort over all ``Nc`` moves; the last ``m`` entries of ``xi``
    are the previous input, which anchors the absolute input bounds.
    """
    Psi, Theta = prediction
    xi = np.asarray(xi, dtype=float)
    p = config.Q.shape[0]
    m = config.R.shape[0]
    Np = Psi.shape[0] // p
    Nc = Theta.shape[1] // m
    ref = np.asarray(ref_stack, dtype=float).reshape(-1)
    if ref.size != Np * p:
        raise InvalidInputError(f"reference stack has {ref.size} entries, expected {Np * p}")
    if not (np.all(np.isfinite(ref)) and np.all(np.isfinite(xi))):
        raise InvalidInputError("reference and state must be finite")
    Qbar = np.kron(np.eye(Np), config.Q)
    Rbar = np.kron(np.eye(Nc), config.R)
    E = Psi @ xi - ref
    TQ = Theta.T @ Qbar
    H = 2.0 * (TQ @ Theta + Rbar)
    H = 0.5 * (H + H.T)
    g = 2.0 * TQ @ E
    u_prev = xi[-m:]
    if m != 1:
        raise InvalidInputError("cumulative input bounds are implemented for a single input")
    return QpProblem(
        H=H,
        g=g,
        lb=np.full(Nc, config.du_min),
        ub=np.full(Nc, config.du_max),
        cum_lb=np.full(Nc, config.u_min - u_prev[0]),
        cum_ub=np.full(Nc, config.u_max - u_prev[0]),
    )


def mpc_cost(prediction, xi, ref_stack, dU, config):
    """Scalar tracking-plus-effort cost for a candidate increment sequence."""
    Psi, Theta = prediction
    p = config.Q.shape[0]
    err = (Psi @ xi + Theta @ dU - np.asarray(ref_stack).reshape(-1)).reshape(-1, p)
    du = np.asarray(dU).reshape(-1, config.R.shape[0])
    return float(np.einsum("ij,jk,ik->", err, config.Q, err) + np.einsum("ij,jk,ik->", du, config.R, du))


def mpc_step(ctrl, measurement, ref_window, config, params):
    """One receding-horizon update.

    ``ref_window`` is an ``(Np, 2)`` array of ``[phi_ref, Y_ref]``. Returns
    ``(u_m, new_ctrl, prediction)`` where ``prediction`` is the model's
    one-step-ahead position and heading used for error labelling.
    """
    model = lin.linearize(measurement, ctrl.u_prev, params, config.dt)
    aug = lin.augment(model.A_disc, model.B_disc)
    x = lin.controller_state(measurement)
    xi = aug.xi(x, ctrl.u_prev)
    pred = build_prediction(aug, config.Np, config.Nc)
    try:
        sol = solve_qp(assemble_qp(pred, xi, ref_window, config), config.max_iter, config.tol)
        dU, status = sol.x, sol.status
    except ElmpcError:
        dU, status = np.zeros(config.Nc), "failed"
    u_m = _apply_increment(ctrl.u_prev, float(dU[0]), config)
    xi_next = aug.A_aug @ xi + aug.B_aug[:, 0] * float(dU[0])
    phi_p, Y_p = aug.C_aug @ xi_next
    X_p = measurement.X + config.dt * (measurement.vx - measurement.vy * measurement.phi)
    prediction = Prediction(float(X_p), float(Y_p), float(phi_p))
    new = replace(ctrl, u_prev=u_m, last_solution=dU, prediction=prediction, status=status)
    return u_m, new, prediction


def _apply_increment(u_prev, du, config):
    """``u_prev + du``, nudged by at most a few ulps so the rounded result
    still satisfies the bounds when the increment is recomputed from it."""
    u = u_prev + du
    for _ in range(4):
        if u - u_prev > config.du_max or u > config.u_max:
            u = math.nextafter(u, -math.inf)
        elif u - u_prev < config.du_min or u < config.u_min:
            u = math.nextafter(u, math.inf)
        else:
            break
    return u


def one_step_prediction_error(predicted, actual):
    """Signed offset of the actual position from the predicted one along the
    vehicle's left-pointing lateral axis (m)."""
    Xp, Yp = predicted[0], predicted[1]
    s, c = math.sin(actual.phi), math.cos(actual.phi)
    return -(actual.X - Xp) * s + (actual.Y - Yp) * c

