"""TOML configuration: schema, per-scenario defaults, validation."""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field

from .quiet_start import CASES, ScenarioSpec


class ConfigError(ValueError):
    pass


# Benchmark defaults; alpha/sigma are the nominal midpoints of each
# scenario's parameter box.
SCENARIO_DEFAULTS = {
    "linear-landau": dict(alpha=0.035, sigma=0.84, k=0.5, n_particles=100_000,
                          n_x=48, T=20.0, dt=2.5e-3),
    "nonlinear-landau": dict(alpha=0.465, sigma=0.986, k=0.5, n_particles=100_000,
                             n_x=64, T=40.0, dt=2.5e-3),
    "two-stream": dict(alpha=0.01, sigma=1.0, k=0.2, n_particles=150_000,
                       n_x=64, T=20.0, dt=2.5e-3),
}

TRAINING_DEFAULTS = {
    "linear-landau": dict(n_modes=121, reduced_dim=3,
                          dense_sizes=[150, 100, 50, 25],
                          hnn_widths=[48, 24, 24, 24, 12]),
    "nonlinear-landau": dict(n_modes=256, reduced_dim=3,
                             dense_sizes=[250, 150, 100, 50, 25],
                             hnn_widths=[96, 48, 48, 48, 24]),
    "two-stream": dict(n_modes=121, reduced_dim=4,
                       dense_sizes=[150, 100, 50, 25],
                       hnn_widths=[48, 24, 24, 24, 12]),
}

_SCENARIO_KEYS = {"case", "alpha", "sigma", "k", "n_particles", "n_x", "T", "dt",
                  "stream_offset"}
_SAMPLING_KEYS = {"stride", "energy_stride"}
_REDUCTION_KEYS = {"n_modes"}
_TRAINING_KEYS = {"reduced_dim", "conv_blocks", "dense_sizes", "hnn_widths",
                  "batch_size", "rho0", "stage1_max_steps", "stage2_steps",
                  "watch_duration", "watch_ramp", "plateau_window", "seed",
                  "log_every", "checkpoint_every"}
_RUN_KEYS = {"seed", "threads", "deterministic", "out_dir"}
_SECTIONS = {"scenario": _SCENARIO_KEYS, "sampling": _SAMPLING_KEYS,
             "reduction": _REDUCTION_KEYS, "training": _TRAINING_KEYS,
             "run": _RUN_KEYS}


@dataclass
class FullConfig:
    scenario: dict
    sampling: dict
    reduction: dict
    training: dict
    run: dict
    applied_defaults: list = field(default_factory=list)

    def scenario_spec(self, **overrides) -> ScenarioSpec:
        kw = {**self.scenario, **overrides}
        return ScenarioSpec(**kw)

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "sampling": self.sampling,
                "reduction": self.reduction, "training": self.training,
                "run": self.run}


def _require(cond: bool, key: str, constraint: str) -> None:
    if not cond:
        raise ConfigError(f"config key '{key}' violates constraint: {constraint}")


def validate(raw: dict) -> FullConfig:
    for section, table in raw.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section '{section}'")
        if not isinstance(table, dict):
            raise ConfigError(f"config section '{section}' must be a table")
        for key in table:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown config key '{section}.{key}'")

    scenario = dict(raw.get("scenario", {}))
    case = scenario.get("case", "linear-landau")
    if case not in CASES:
        raise ConfigError(f"config key 'scenario.case' violates constraint: "
                          f"case in {sorted(CASES)}")
    applied = []
    for key, value in SCENARIO_DEFAULTS[case].items():
        if key not in scenario:
            scenario[key] = value
            applied.append(f"scenario.{key}={value}")
    scenario["case"] = case

    _require(scenario["dt"] > 0, "scenario.dt", "dt > 0")
    _require(scenario["T"] > 0, "scenario.T", "T > 0")
    _require(scenario["alpha"] > 0, "scenario.alpha", "alpha > 0")
    _require(scenario["sigma"] > 0, "scenario.sigma", "sigma > 0")
    _require(scenario["k"] > 0, "scenario.k", "k > 0")
    _require(int(scenario["n_x"]) >= 4, "scenario.n_x", "n_x >= 4")
    _require(int(scenario["n_particles"]) >= 1, "scenario.n_particles",
             "n_particles >= 1")
    ratio = scenario["T"] / scenario["dt"]
    _require(abs(ratio - round(ratio)) <= 1e-9 * max(1.0, ratio),
             "scenario.T", "T/dt must be integral")
    scenario["n_particles"] = int(scenario["n_particles"])
    scenario["n_x"] = int(scenario["n_x"])

    sampling = {"stride": 25, "energy_stride": 1, **raw.get("sampling", {})}
    _require(int(sampling["stride"]) >= 1, "sampling.stride", "stride >= 1")
    _require(int(sampling["energy_stride"]) >= 1, "sampling.energy_stride",
             "energy_stride >= 1")

    tdef = TRAINING_DEFAULTS[case]
    reduction = {"n_modes": tdef["n_modes"], **raw.get("reduction", {})}
    _require(int(reduction["n_modes"]) >= 1, "reduction.n_modes", "n_modes >= 1")

    training = {
        "reduced_dim": tdef["reduced_dim"], "conv_blocks": 2,
        "dense_sizes": tdef["dense_sizes"], "hnn_widths": tdef["hnn_widths"],
        "batch_size": 64, "rho0": 1e-3, "stage1_max_steps": 2000,
        "stage2_steps": 4000, "watch_duration": 16, "watch_ramp": [],
        "plateau_window": 500, "seed": 0, "log_every": 50,
        "checkpoint_every": 0, **raw.get("training", {}),
    }
    _require(int(training["reduced_dim"]) >= 1, "training.reduced_dim",
             "reduced_dim >= 1")
    _require(training["rho0"] > 0, "training.rho0", "rho0 > 0")
    _require(int(training["batch_size"]) >= 1, "training.batch_size",
             "batch_size >= 1")

    run = {"seed": 0, "threads": 1, "deterministic": True, "out_dir": ".",
           **raw.get("run", {})}
    _require(int(run["threads"]) >= 1, "run.threads", "threads >= 1")

    return FullConfig(scenario=scenario, sampling=sampling, reduction=reduction,
                      training=training, run=run, applied_defaults=applied)


def parse_config(path: str) -> FullConfig:
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return validate(raw)
