"""Typed, sectioned key-value configuration.

Files use INI syntax (``[section]`` headers, ``key = value`` lines); every
key is declared in :data:`SCHEMA` with a type and a default, so unknown keys
are rejected and values are parsed consistently whether they come from a
file or from a ``section.key=value`` override.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

from .environments import GaussianArmSpec
from .errors import ConfigurationError
from .policies import PolicyKind, init_pulls
from .predictors import KINDS as PREDICTOR_KINDS


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _list_of(parse):
    def parse_list(text: str):
        parts = [p.strip() for p in text.replace(";", ",").split(",")]
        return [parse(p) for p in parts if p]
    parse_list.__name__ = f"list[{parse.__name__}]"
    return parse_list


FLOAT_LIST = _list_of(float)
INT_LIST = _list_of(_parse_int)
STR_LIST = _list_of(str.strip)

_QUANTILE_S_DEFAULT = [10.0 ** (k / 4) for k in range(4, 25)]

SCHEMA: dict[str, dict[str, tuple[Any, Any]]] = {
    "run": {
        "environment": (str.strip, "gaussian"),
        "policies": (STR_LIST, ["mla_ucb", "chk_ucb"]),
        "horizon": (_parse_int, 1000),
        "replications": (_parse_int, 100),
        "seed": (_parse_int, 0),
        "offline_size": (INT_LIST, [100]),
        "trace": (_parse_bool, False),
    },
    "gaussian": {
        "mu": (FLOAT_LIST, [0.5, 0.0, 0.0, 0.0, 0.0]),
        "mu_tilde": (FLOAT_LIST, [0.0, 0.25, 0.5, 0.75, 1.0]),
        "sigma": (FLOAT_LIST, [1.0]),
        "sigma_tilde": (FLOAT_LIST, [1.0]),
        "rho": (FLOAT_LIST, [math.sqrt(0.5)]),
    },
    "feature": {
        "n_arms": (_parse_int, 5),
        "noise_sigma": (float, 0.2),
        "predictor": (str.strip, "tree"),
        "train_size": (_parse_int, 2000),
        "weight_low": (float, 0.5),
        "weight_high": (float, 1.5),
        "weight_seed": (_parse_int, 0),
    },
    "tree": {
        "max_depth": (_parse_int, 6),
        "min_leaf": (_parse_int, 10),
    },
    "mlp": {
        "width": (_parse_int, 32),
        "steps": (_parse_int, 2000),
        "step_size": (float, 0.01),
    },
    "classical": {
        "sigma": (FLOAT_LIST, []),
    },
    "sweep": {
        "axis": (str.strip, "N"),
        "grid": (FLOAT_LIST, [0.0, 100.0, 1000.0, 10000.0]),
    },
    "coverage": {
        "n": (INT_LIST, [10, 20]),
        "offline": (INT_LIST, [100, 10000]),
        "rho": (FLOAT_LIST, [0.0, 0.7, 0.95]),
        "delta": (FLOAT_LIST, [0.01, 0.05]),
        "reps": (_parse_int, 20000),
        "mu": (float, 0.0),
        "mu_tilde": (float, 1.0),
        "sigma": (float, 1.0),
        "sigma_tilde": (float, 1.0),
    },
    "quantile_table": {
        "s": (FLOAT_LIST, _QUANTILE_S_DEFAULT),
        "d": (INT_LIST, []),
    },
}


def defaults() -> dict[str, dict[str, Any]]:
    return {sec: {k: (list(v) if isinstance(v, list) else v) for k, (_, v) in keys.items()}
            for sec, keys in SCHEMA.items()}


def _set(values, section, key, text):
    name = f"{section}.{key}"
    if section not in SCHEMA:
        raise ConfigurationError("unknown section", name)
    if key not in SCHEMA[section]:
        raise ConfigurationError("unknown key", name)
    parse = SCHEMA[section][key][0]
    try:
        values[section][key] = parse(text)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse {text!r} ({exc})", name) from None


def bundled_config_path(name: str) -> Path:
    ref = resources.files("mlaucb") / "configs" / name
    return Path(str(ref))


def resolve_config_path(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    for candidate in (path, f"{path}.cfg"):
        bundled = bundled_config_path(candidate)
        if bundled.exists():
            return bundled
    raise ConfigurationError(f"config file not found: {path}", "--config")


def load_config(path: Optional[str] = None, overrides: Sequence[str] = (),
                seed: Optional[int] = None) -> dict[str, dict[str, Any]]:
    """Defaults, then the file at ``path``, then ``section.key=value`` overrides, then ``seed``."""
    values = defaults()
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                           interpolation=None)
        parser.optionxform = str
        resolved = resolve_config_path(path)
        try:
            parser.read_string(resolved.read_text(encoding="utf-8"), source=str(resolved))
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed config file: {exc}", "--config") from None
        for section in parser.sections():
            for key, text in parser.items(section):
                _set(values, section, key, text)
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override must look like section.key=value, got {item!r}", "--set")
        dotted, text = item.split("=", 1)
        if "." not in dotted:
            raise ConfigurationError("override key must be section.key", dotted.strip())
        section, key = dotted.strip().split(".", 1)
        _set(values, section, key, text)
    if seed is not None:
        values["run"]["seed"] = int(seed)
    return values


def _broadcast(values: list, n: int, name: str) -> list:
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise ConfigurationError(f"expected 1 or {n} values, got {len(values)}", name)
    return list(values)


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one experiment needs; validated on construction."""

    environment: str = "gaussian"
    policies: tuple[PolicyKind, ...] = (PolicyKind.MLA, PolicyKind.CHK)
    horizon: int = 1000
    replications: int = 100
    base_seed: int = 0
    offline_sizes: tuple[int, ...] = (100,) * 5
    arms: tuple[GaussianArmSpec, ...] = ()
    feature: dict = field(default_factory=dict)
    predictor_options: dict = field(default_factory=dict)
    known_sigmas: Optional[tuple[float, ...]] = None
    trace: bool = False

    def __post_init__(self):
        if self.environment not in ("gaussian", "feature"):
            raise ConfigurationError(f"unknown environment {self.environment!r}", "run.environment")
        if not self.policies:
            raise ConfigurationError("at least one policy is required", "run.policies")
        K = self.n_arms
        if K < 1:
            raise ConfigurationError("at least one arm is required", "gaussian.mu")
        if self.replications < 1:
            raise ConfigurationError(f"replications must be >= 1, got {self.replications}", "run.replications")
        if len(self.offline_sizes) != K:
            raise ConfigurationError(f"expected {K} offline sizes", "run.offline_size")
        if any(n < 0 for n in self.offline_sizes):
            raise ConfigurationError("offline sizes must be >= 0", "run.offline_size")
        for kind in self.policies:
            need = init_pulls(kind) * K
            if self.horizon <= need:
                raise ConfigurationError(
                    f"T={self.horizon} must exceed the {kind} initialization length "
                    f"{init_pulls(kind)}K={need} (T < {init_pulls(kind)}K+1)", "run.horizon")
            if kind is PolicyKind.CLASSICAL and self.known_sigmas is None:
                raise ConfigurationError("classical_ucb needs known sigmas", "classical.sigma")
        if self.known_sigmas is not None and len(self.known_sigmas) != K:
            raise ConfigurationError(f"expected {K} known sigmas", "classical.sigma")
        if self.environment == "gaussian":
            mus = [a.mu for a in self.arms]
            best = max(mus)
            if mus.count(best) > 1:
                raise ConfigurationError("the optimal arm must be unique (no tie at the top)", "gaussian.mu")

    @property
    def n_arms(self) -> int:
        if self.environment == "gaussian":
            return len(self.arms)
        return int(self.feature.get("n_arms", 0))

    @classmethod
    def from_values(cls, values: dict) -> "SimulationConfig":
        run = values["run"]
        try:
            policies = tuple(PolicyKind(p) for p in run["policies"])
        except ValueError as exc:
            raise ConfigurationError(str(exc), "run.policies") from None
        env = run["environment"]
        if env == "gaussian":
            g = values["gaussian"]
            K = len(g["mu"])
            cols = {k: _broadcast(g[k], K, f"gaussian.{k}") for k in ("mu_tilde", "sigma", "sigma_tilde", "rho")}
            try:
                arms = tuple(
                    GaussianArmSpec(g["mu"][k], cols["mu_tilde"][k], cols["sigma"][k],
                                    cols["sigma_tilde"][k], cols["rho"][k])
                    for k in range(K))
            except ConfigurationError as exc:
                raise ConfigurationError(str(exc).split(": ", 1)[-1], f"gaussian.{exc.field}") from None
            feature = {}
        else:
            arms = ()
            feature = dict(values["feature"])
            K = feature["n_arms"]
            if feature["predictor"] not in PREDICTOR_KINDS:
                raise ConfigurationError(f"unknown predictor {feature['predictor']!r}", "feature.predictor")
        if K < 1:
            raise ConfigurationError("at least one arm is required", "feature.n_arms" if env == "feature" else "gaussian.mu")
        predictor_options = {}
        if env == "feature" and feature["predictor"] in ("tree", "mlp"):
            predictor_options = dict(values[feature["predictor"]])
        sig = values["classical"]["sigma"]
        if sig:
            known = tuple(_broadcast(sig, K, "classical.sigma"))
        elif env == "gaussian":
            known = tuple(a.sigma for a in arms)
        else:
            known = None
        return cls(
            environment=env,
            policies=policies,
            horizon=run["horizon"],
            replications=run["replications"],
            base_seed=run["seed"],
            offline_sizes=tuple(_broadcast(run["offline_size"], K, "run.offline_size")),
            arms=arms,
            feature=feature,
            predictor_options=predictor_options,
            known_sigmas=known,
            trace=run["trace"],
        )

    def replace(self, **changes) -> "SimulationConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "environment": self.environment,
            "policies": [str(p) for p in self.policies],
            "horizon": self.horizon,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "offline_sizes": list(self.offline_sizes),
            "arms": [dataclasses.asdict(a) for a in self.arms],
            "feature": dict(self.feature),
            "predictor_options": dict(self.predictor_options),
            "known_sigmas": None if self.known_sigmas is None else list(self.known_sigmas),
        }
