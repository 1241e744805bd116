"""YAML experiment configuration.

A user file is merged key-by-key over the packaged defaults. Errors name
the offending key and, where the YAML parser can tell, its line.
"""

import copy
from dataclasses import dataclass
from importlib import resources

import yaml

from .compensator import PidConfig
from .elm import TrainConfig
from .errors import ConfigError, ElmpcError
from .mpc import MpcConfig
from .paths import make_path, path_to_dict
from .sim import Scenario
from .vehicle import Perturbation, VehicleParams

SCENARIO_KEYS = {"name", "path", "speed", "speed_kmh", "duration", "plant_mode", "perturbation",
                 "x0", "y0", "phi0", "seed"}


def default_text():
    return resources.files("elmpc").joinpath("data/default.yaml").read_text()


def _line_index(text, source):
    """Map dotted key paths to 1-based line numbers."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                lines[path] = key.start_mark.line + 1
                walk(value, path)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                path = f"{prefix}[{i}]"
                lines[path] = item.start_mark.line + 1
                walk(item, path)

    try:
        walk(yaml.compose(text, Loader=yaml.SafeLoader), "")
    except yaml.YAMLError as exc:
        raise ConfigError(_yaml_message(exc, source)) from None
    return lines


def _yaml_message(exc, source):
    mark = getattr(exc, "problem_mark", None)
    where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
    problem = getattr(exc, "problem", None) or str(exc)
    context = getattr(exc, "context_mark", None)
    if context is not None and (mark is None or context.line != mark.line):
        problem += f" ({exc.context} at line {context.line + 1})"
    return f"{where}: YAML syntax error: {problem}"


def parse_yaml(text, source="<config>"):
    """Return ``(data, lines)`` for a YAML mapping."""
    lines = _line_index(text, source)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(_yaml_message(exc, source)) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return data, lines


# keys that replace each other when merging
_ALTERNATIVES = {"speed": "speed_kmh", "speed_kmh": "speed"}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        old = out.get(key)
        if key == "path" and isinstance(value, dict) and isinstance(old, dict) \
                and value.get("kind", old.get("kind")) != old.get("kind"):
            # a different path kind starts from a clean parameter set
            out[key] = copy.deepcopy(value)
        elif isinstance(value, dict) and isinstance(old, dict):
            out[key] = _merge(old, value)
        else:
            out.pop(_ALTERNATIVES.get(key), None)
            out[key] = copy.deepcopy(value)
    return out


def _unknown_keys(user, default, prefix=""):
    for key, value in user.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if key not in default:
            yield path
        elif isinstance(value, dict) and isinstance(default[key], dict) and key not in ("scenario", "perturbation"):
            yield from _unknown_keys(value, default[key], path)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    vehicle: VehicleParams
    plant_mode: str
    plant_dt: float
    perturbation: Perturbation
    mpc: MpcConfig
    train: TrainConfig
    pid: PidConfig
    n_samples: int
    n_test: int
    collect_scenarios: tuple
    simulate_scenario: Scenario
    landmarks: tuple
    raw: dict


def load_config(path=None, seed=None):
    """Load the defaults, merge ``path`` over them and validate."""
    defaults, _ = parse_yaml(default_text(), "default.yaml")
    user, lines = {}, {}
    source = "default.yaml"
    if path is not None:
        source = str(path)
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"{source}: cannot read config: {exc.strerror}") from None
        user, lines = parse_yaml(text, source)
        unknown = list(_unknown_keys(user, defaults))
        if unknown:
            first = unknown[0]
            raise ConfigError(f"{_where(source, lines, first)}: unknown key {first!r}")
    raw = _merge(defaults, user)
    if seed is not None:
        raw["seed"] = int(seed)
    return build_config(raw, lines, source)


def _where(source, lines, key):
    # fall back to the nearest enclosing key that has a recorded line
    probe = key
    while probe:
        if probe in lines:
            return f"{source}:{lines[probe]}"
        probe = probe.rpartition(".")[0]
    return source


def build_config(raw, lines, source):
    def section(key, build):
        try:
            return build(raw[key])
        except ConfigError:
            raise
        except (ElmpcError, TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"{_where(source, lines, key)}: invalid '{key}' section: {exc}") from None

    seed = section("seed", int)
    vehicle = section("vehicle", lambda d: VehicleParams(**d))
    plant = raw["plant"]
    perturbation = section("plant", lambda d: _perturbation(d["perturbation"]))
    plant_mode = plant.get("mode", "default")
    plant_dt = section("plant", lambda d: _positive(float(d["dt"]), "plant dt"))
    mpc = section("mpc", lambda d: MpcConfig(**d))
    train = section("elm", lambda d: TrainConfig(seed=seed, **d))
    pid = section("pid", lambda d: PidConfig(**d))
    collect = raw["collect"]
    n_samples = section("collect", lambda d: _positive(int(d["n_samples"]), "n_samples"))
    n_test = section("collect", lambda d: int(d["n_test"]))

    def scenario(d, key):
        try:
            return _scenario(d, perturbation, plant_mode, seed)
        except ConfigError as exc:
            raise ConfigError(f"{_where(source, lines, key)}: {exc}") from None
        except (ElmpcError, TypeError, ValueError) as exc:
            raise ConfigError(f"{_where(source, lines, key)}: invalid scenario: {exc}") from None

    scenarios = tuple(scenario(d, f"collect.scenarios[{i}]") for i, d in enumerate(collect["scenarios"]))
    if not scenarios:
        raise ConfigError(f"{_where(source, lines, 'collect')}: at least one collection scenario is needed")
    sim_scenario = scenario(raw["simulate"]["scenario"], "simulate.scenario")
    landmarks = section("landmarks", lambda v: tuple(float(x) for x in v))
    return ExperimentConfig(seed, vehicle, plant_mode, plant_dt, perturbation, mpc, train, pid,
                            n_samples, n_test, scenarios, sim_scenario, landmarks, raw)


def _positive(v, name):
    if not v > 0:
        raise ValueError(f"{name} must be > 0")
    return v


def _perturbation(d):
    d = dict(d or {})
    override = d.pop("tire_model", None)
    return Perturbation(tire_model_override=override, **d)


def _scenario(d, perturbation, plant_mode, seed):
    if not isinstance(d, dict):
        raise ConfigError("scenario must be a mapping")
    unknown = sorted(set(d) - SCENARIO_KEYS)
    if unknown:
        raise ConfigError(f"unknown scenario key {unknown[0]!r}")
    if "path" not in d or "kind" not in d["path"]:
        raise ConfigError("scenario needs a path with a 'kind'")
    path_spec = dict(d["path"])
    path = make_path(path_spec.pop("kind"), **path_spec)
    if "speed" in d and "speed_kmh" in d:
        raise ConfigError("give either speed or speed_kmh, not both")
    speed = float(d["speed"]) if "speed" in d else float(d.get("speed_kmh", 75.0)) / 3.6
    pert = _perturbation(d["perturbation"]) if "perturbation" in d else perturbation
    return Scenario(
        name=str(d.get("name", path.kind)),
        path=path,
        speed=speed,
        duration=float(d["duration"]),
        perturbation=pert,
        plant_mode=d.get("plant_mode", plant_mode),
        y0=float(d.get("y0", 0.0)),
        phi0=float(d.get("phi0", 0.0)),
        x0=float(d.get("x0", 0.0)),
        seed=int(d.get("seed", seed)),
    )


def scenario_identity(scenario, vehicle, plant_dt):
    """JSON-ready description of everything that defines a run's plant and
    reference, used to check that two logs are comparable."""
    p = scenario.perturbation
    return {
        "name": scenario.name,
        "path": path_to_dict(scenario.path),
        "speed": scenario.speed,
        "duration": scenario.duration,
        "plant_mode": scenario.plant_mode,
        "perturbation": [p.cg_shift, p.mass_scale, p.stiffness_scale, p.tire_model_override],
        "initial": [scenario.x0, scenario.y0, scenario.phi0],
        "seed": scenario.seed,
        "vehicle": vars(vehicle),
        "plant_dt": plant_dt,
    }
