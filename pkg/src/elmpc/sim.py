"""Closed-loop scenarios, training-data collection and tracking metrics."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import elm
from .compensator import PidState, combine, pid_step
from .errors import InvalidInputError, SimulationAbort
from .mpc import ControllerState, mpc_step, one_step_prediction_error
from .paths import DoubleLaneChangePath
from .vehicle import LINEAR, Perturbation, VehicleState, integrate, perturb_params

log = logging.getLogger(__name__)

DEFAULT_SPEED = 75.0 / 3.6
DEFAULT_PLANT_DT = 0.002
DIVERGENCE_LIMIT = 100.0

DEFAULT = "default"
MATCHED = "matched"

LOG_COLUMNS = (
    "t", "X", "Y", "phi", "vx", "vy", "r",
    "u_m", "u_c", "u_star", "Xp", "Yp",
    "e", "eX", "eY", "e_next", "e_hat",
    "Y_ref", "phi_ref", "solver_ok",
)


@dataclass(frozen=True)
class Scenario:
    """One closed-loop run.

    ``plant_mode="matched"`` replaces the plant by the controller's own model
    (nominal parameters, linear tire, small-angle kinematics, one Euler step
    per controller tick); otherwise the plant is the perturbed model with
    exact kinematics integrated by RK4 at ``plant_dt``.
    """

    name: str
    path: object = field(default_factory=DoubleLaneChangePath)
    speed: float = DEFAULT_SPEED
    duration: float = 10.0
    perturbation: Perturbation = field(default_factory=Perturbation)
    plant_mode: str = DEFAULT
    y0: float = 0.0
    phi0: float = 0.0
    x0: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.speed > 0 and self.duration > 0):
            raise InvalidInputError("scenario speed and duration must be > 0")
        if self.plant_mode not in (DEFAULT, MATCHED):
            raise InvalidInputError(f"unknown plant_mode {self.plant_mode!r}")

    def initial_state(self):
        return VehicleState(X=self.x0, Y=self.y0, phi=self.phi0, vx=self.speed)


@dataclass
class SimLog:
    scenario: str
    mode: str
    dt: float
    columns: dict
    aborted: Optional[str] = None

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name):
        return self.columns[name]

    def features(self):
        """Estimator inputs ``[X, Y, phi, r, vx, vy, s_fl, s_fr]`` per tick."""
        c = self.columns
        zeros = np.zeros(len(self))
        return np.column_stack([c["X"], c["Y"], c["phi"], c["r"], c["vx"], c["vy"], zeros, zeros])

    def training_data(self):
        ok = np.isfinite(self.columns["e_next"])
        return elm.Dataset(self.features()[ok], self.columns["e_next"][ok])

    def same_values(self, other):
        if len(self) != len(other) or self.columns.keys() != other.columns.keys():
            return False
        return all(np.array_equal(self[k], other[k], equal_nan=True) for k in self.columns)


def plant_setup(scenario, nominal, mpc_dt, plant_dt=DEFAULT_PLANT_DT):
    """Return ``(params, method, substeps, sub_dt, small_angle)`` for the plant."""
    if scenario.plant_mode == MATCHED:
        if nominal.tire_model != LINEAR:
            raise InvalidInputError("matched mode needs a linear-tire controller model")
        return nominal, "euler", 1, mpc_dt, True
    substeps = max(1, int(round(mpc_dt / plant_dt)))
    return perturb_params(nominal, scenario.perturbation), "rk4", substeps, mpc_dt / substeps, False


def reference_window(path, state, Np, dt):
    """``(Np, 2)`` array of ``[phi_ref, Y_ref]`` at ``X + i*vx*dt``, ``i = 1..Np``."""
    Xs = state.X + state.vx * dt * np.arange(1, Np + 1)
    y, phi = path.lookup(Xs)
    return np.column_stack([phi, y])


def run_closed_loop(scenario, mpc_config, params, pid_config=None, elm_model=None, plant_dt=DEFAULT_PLANT_DT):
    """Simulate the plant under MPC, optionally with the ELM/PID compensator.

    ``params`` are the controller's nominal vehicle parameters. The estimator
    and compensator must be given together. Raises :class:`SimulationAbort`
    (with the partial log attached) if the plant diverges.
    """
    if (pid_config is None) != (elm_model is None):
        raise InvalidInputError("estimator and compensator must be enabled together")
    dt = mpc_config.dt
    compensated = elm_model is not None
    plant_params, method, substeps, sub_dt, small_angle = plant_setup(scenario, params, dt, plant_dt)
    n_ticks = math.ceil(scenario.duration / dt - 1e-9)
    path = scenario.path

    rows = {k: np.full(n_ticks, np.nan) for k in LOG_COLUMNS}
    x = scenario.initial_state().as_array()
    ctrl = ControllerState()
    pid = PidState()
    prev_pred = None
    abort = None
    done = 0

    def realized(pred, state):
        return (one_step_prediction_error(pred, state), state.X - pred.Xp, state.Y - pred.Yp)

    for k in range(n_ticks):
        x[3] = scenario.speed
        state = VehicleState.from_array(x)
        if prev_pred is not None:
            e, ex, ey = realized(prev_pred, state)
            rows["e"][k], rows["eX"][k], rows["eY"][k] = e, ex, ey
            rows["e_next"][k - 1] = e
        y_ref, phi_ref = path.lookup(state.X)
        u_m, ctrl, pred = mpc_step(ctrl, state, reference_window(path, state, mpc_config.Np, dt), mpc_config, params)
        u_c = 0.0
        e_hat = np.nan
        if compensated:
            feats = np.array([state.X, state.Y, state.phi, state.r, state.vx, state.vy, 0.0, 0.0])
            e_hat = float(elm.predict(elm_model, feats))
            u_c, pid = pid_step(pid, e_hat, dt, pid_config)
        u_star = combine(u_m, u_c, mpc_config.u_min, mpc_config.u_max)
        for key, val in (
            ("t", k * dt), ("X", state.X), ("Y", state.Y), ("phi", state.phi), ("vx", state.vx),
            ("vy", state.vy), ("r", state.r), ("u_m", u_m), ("u_c", u_c), ("u_star", u_star),
            ("Xp", pred.Xp), ("Yp", pred.Yp), ("e_hat", e_hat), ("Y_ref", y_ref), ("phi_ref", phi_ref),
            ("solver_ok", 1.0 if ctrl.status == "optimal" else 0.0),
        ):
            rows[key][k] = val
        done = k + 1
        try:
            for _ in range(substeps):
                x = integrate(x, u_star, plant_params, sub_dt, method, small_angle)
        except ValueError as exc:
            abort = f"plant integration failed at t={k * dt:.3f}s: {exc}"
            break
        if not np.all(np.isfinite(x)) or abs(x[1]) > DIVERGENCE_LIMIT:
            abort = f"plant diverged at t={(k + 1) * dt:.3f}s (Y={x[1]:.3g})"
            break
        prev_pred = pred
        if k == n_ticks - 1:
            final = VehicleState.from_array(np.r_[x[:3], scenario.speed, x[4:]])
            rows["e_next"][k] = realized(pred, final)[0]

    mode = "compensated" if compensated else "mpc_only"
    columns = {key: val[:done] for key, val in rows.items()}
    result = SimLog(scenario.name, mode, dt, columns, aborted=abort)
    if abort:
        raise SimulationAbort(f"{scenario.name}: {abort}", log=result)
    return result


def apportion(weights, total):
    """Largest-remainder split of ``total`` integer units by ``weights``."""
    w = np.asarray(weights, dtype=float)
    raw = total * w / w.sum()
    counts = np.floor(raw).astype(int)
    for i in np.argsort(-(raw - counts), kind="stable")[: total - counts.sum()]:
        counts[i] += 1
    return counts.tolist()


def collect_training_data(scenarios, mpc_config, params, n_samples=1250, plant_dt=DEFAULT_PLANT_DT):
    """Run MPC-only scenarios and pair tick features with next-tick errors.

    Sample counts are apportioned by scenario duration and each scenario is
    run for exactly its share of controller ticks. Returns
    ``(dataset, logs)``.
    """
    counts = apportion([s.duration for s in scenarios], n_samples)
    parts, logs = [], []
    for scenario, count in zip(scenarios, counts):
        if count == 0:
            continue
        run = Scenario(**{**scenario.__dict__, "duration": count * mpc_config.dt})
        try:
            slog = run_closed_loop(run, mpc_config, params, plant_dt=plant_dt)
        except SimulationAbort as exc:
            log.warning("%s; keeping %d completed ticks", exc, len(exc.log))
            slog = exc.log
        logs.append(slog)
        parts.append(slog.training_data())
    return elm.Dataset.concat(parts), logs


def split_dataset(data, n_test=250, seed=0):
    n = len(data)
    if not 0 <= n_test < n:
        raise InvalidInputError(f"n_test must be in [0, {n}), got {n_test}")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return data.subset(train_idx), data.subset(test_idx)


@dataclass
class Metrics:
    rms_lateral: float
    max_lateral: float
    rms_heading: float
    max_heading: float
    max_abs_u: float
    landmarks: dict
    reduction: Optional[dict] = None

    def as_dict(self):
        return {
            "rms_lateral": self.rms_lateral,
            "max_lateral": self.max_lateral,
            "rms_heading": self.rms_heading,
            "max_heading": self.max_heading,
            "max_abs_u": self.max_abs_u,
            "landmarks": {str(k): v for k, v in self.landmarks.items()},
            "reduction": self.reduction,
        }


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def lateral_error(slog):
    return slog["Y"] - slog["Y_ref"]


def landmark_errors(slog, landmarks):
    X, lat = slog["X"], lateral_error(slog)
    out = {}
    for xl in landmarks:
        if len(X) == 0 or xl < X.min() or xl > X.max():
            out[float(xl)] = None
        else:
            order = np.argsort(X, kind="stable")
            out[float(xl)] = float(np.interp(xl, X[order], lat[order]))
    return out


def _reduction(base, cand):
    return None if base is None or cand is None or base == 0 else 100.0 * (base - cand) / base


def compute_metrics(slog, baseline=None, landmarks=()):
    if len(slog) == 0:
        raise InvalidInputError("empty log")
    lat = lateral_error(slog)
    head = wrap_angle(slog["phi"] - slog["phi_ref"])
    m = Metrics(
        rms_lateral=float(np.sqrt(np.mean(lat ** 2))),
        max_lateral=float(np.max(np.abs(lat))),
        rms_heading=float(np.sqrt(np.mean(head ** 2))),
        max_heading=float(np.max(np.abs(head))),
        max_abs_u=float(np.max(np.abs(slog["u_star"]))),
        landmarks=landmark_errors(slog, landmarks),
    )
    if baseline is not None:
        b = compute_metrics(baseline, landmarks=landmarks)
        red = {k: _reduction(getattr(b, k), getattr(m, k))
               for k in ("rms_lateral", "max_lateral", "rms_heading", "max_heading", "max_abs_u")}
        for xl, v in m.landmarks.items():
            bv = b.landmarks.get(xl)
            red[f"landmark_{xl:g}"] = _reduction(abs(bv) if bv is not None else None,
                                                 abs(v) if v is not None else None)
        m.reduction = red
    return m
