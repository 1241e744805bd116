"""Reference paths parameterized by global X.

Every path maps ``X -> (Y_ref, phi_ref)`` with ``phi_ref = atan(dY_ref/dX)``
computed from the analytic derivative. Lookups accept scalars or arrays.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class StraightPath:
    kind = "straight"
    offset: float = 0.0

    def y_and_slope(self, X):
        X = np.asarray(X, dtype=float)
        return np.full_like(X, self.offset), np.zeros_like(X)

    def lookup(self, X):
        return _with_heading(*self.y_and_slope(X))


@dataclass(frozen=True)
class ConstantTurnPath:
    """Straight lead-in, circular arc from ``x_start``, then the arc's tangent
    once the heading reaches ``max_heading`` (keeps the X-parameterization
    single valued). ``direction`` is +1 for a left turn, -1 for right."""

    kind = "constant_turn"
    radius: float = 200.0
    x_start: float = 0.0
    max_heading: float = 1.0
    direction: float = 1.0

    def __post_init__(self):
        if not self.radius > 0 or not 0 < self.max_heading < np.pi / 2:
            raise ConfigError("constant_turn needs radius > 0 and 0 < max_heading < pi/2")

    def y_and_slope(self, X):
        u = np.asarray(X, dtype=float) - self.x_start
        R = self.radius
        u_max = R * np.sin(self.max_heading)
        y_max = R * (1.0 - np.cos(self.max_heading))
        uc = np.clip(u, 0.0, u_max)
        root = np.sqrt(R * R - uc * uc)
        y = np.where(u > u_max, y_max + np.tan(self.max_heading) * (u - u_max), R - root)
        slope = np.where(u > u_max, np.tan(self.max_heading), uc / root)
        return self.direction * y, self.direction * slope

    def lookup(self, X):
        return _with_heading(*self.y_and_slope(X))


@dataclass(frozen=True)
class DoubleLaneChangePath:
    """Two tanh-shaped lane shifts: up by ``d1`` then down by ``d2``."""

    kind = "double_lane_change"
    d1: float = 4.05
    d2: float = 5.7
    len1: float = 25.0
    len2: float = 21.95
    x1: float = 27.19
    x2: float = 56.46
    shape: float = 2.4
    shift: float = 1.2

    def y_and_slope(self, X):
        X = np.asarray(X, dtype=float)
        k1 = self.shape / self.len1
        k2 = self.shape / self.len2
        z1 = k1 * (X - self.x1) - self.shift
        z2 = k2 * (X - self.x2) - self.shift
        t1, t2 = np.tanh(z1), np.tanh(z2)
        y = 0.5 * self.d1 * (1.0 + t1) - 0.5 * self.d2 * (1.0 + t2)
        slope = 0.5 * self.d1 * k1 * (1.0 - t1 * t1) - 0.5 * self.d2 * k2 * (1.0 - t2 * t2)
        return y, slope

    def lookup(self, X):
        return _with_heading(*self.y_and_slope(X))


def _with_heading(y, slope):
    phi = np.arctan(slope)
    if np.ndim(y) == 0:
        return float(y), float(phi)
    return y, phi


PATH_TYPES = {cls.kind: cls for cls in (StraightPath, ConstantTurnPath, DoubleLaneChangePath)}


def make_path(kind, **params):
    try:
        cls = PATH_TYPES[kind]
    except KeyError:
        raise ConfigError(f"unknown path kind {kind!r}; expected one of {sorted(PATH_TYPES)}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {kind} path: {exc}") from None


def path_to_dict(path):
    return {"kind": path.kind, **asdict(path)}


def reference_lookup(path, X):
    return path.lookup(X)
