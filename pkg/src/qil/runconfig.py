"""Run configuration: per-env defaults, user overrides, and TOML snapshots.

Resolution order, later wins:

    configs/<env>.toml [policy] -> [<algorithm>] -> user file (same layout)
    -> command-line overrides

A resolved :class:`RunConfig` serialises to a flat TOML snapshot
(``env``, ``algorithm``, ``seeds``, ``[demos]``, ``[settings]``) that feeds
back through the same resolution unchanged.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from . import envs
from .errors import ConfigurationError
from .qbc import QbcConfig
from .qgail import QgailConfig

ALGORITHMS = {"qbc": QbcConfig, "qgail": QgailConfig}
CONFIG_DIR = Path(__file__).parent / "configs"
DEMO_KEYS = {"path", "n_trajectories", "seed", "greedy"}


def default_file(env_id: str) -> Path:
    alias = {v: k for k, v in envs.ALIASES.items()}.get(envs.canonical_id(env_id))
    path = CONFIG_DIR / f"{alias}.toml"
    if alias is None or not path.exists():
        raise ConfigurationError(f"no default config for {env_id}")
    return path


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def parse_assignment(text: str) -> tuple[str, object]:
    """``key=value`` with a TOML value, e.g. ``lr=[0.1,0.01,0.1]``."""
    if "=" not in text:
        raise ConfigurationError(f"expected key=value, got {text!r}")
    try:
        d = tomllib.loads(text)
    except tomllib.TOMLDecodeError:
        key, value = text.split("=", 1)
        d = tomllib.loads(f'{key.strip()} = "{value.strip()}"')
    ((key, value),) = d.items()
    return key, value


def settings_fields(algorithm: str) -> set[str]:
    return {f.name for f in dataclasses.fields(ALGORITHMS[algorithm])} - {"env_id", "seed"}


def defaults(env_id: str) -> dict:
    return load_toml(default_file(env_id))


@dataclass
class RunConfig:
    env_id: str
    algorithm: str
    seeds: list[int]
    settings: dict
    demos: dict = field(default_factory=dict)

    def __post_init__(self):
        self.env_id = envs.canonical_id(self.env_id)
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        unknown = set(self.settings) - settings_fields(self.algorithm)
        if unknown:
            raise ConfigurationError(f"unknown {self.algorithm} settings: {sorted(unknown)}")
        unknown = set(self.demos) - DEMO_KEYS
        if unknown:
            raise ConfigurationError(f"unknown [demos] keys: {sorted(unknown)}")
        self.seeds = [int(s) for s in self.seeds]
        # validate and fill every field so the snapshot is fully resolved
        self.settings = _strip_none({k: v for k, v in self.algorithm_config(self.seeds[0]).to_dict().items()
                                     if k not in ("env_id", "seed")})

    def algorithm_config(self, seed: int):
        try:
            return ALGORITHMS[self.algorithm](env_id=self.env_id, seed=int(seed), **self.settings)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    def to_dict(self) -> dict:
        return {"env": self.env_id, "algorithm": self.algorithm, "seeds": list(self.seeds),
                "demos": dict(self.demos), "settings": dict(self.settings)}

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(d["env"], d["algorithm"], list(d["seeds"]), dict(d.get("settings", {})), dict(d.get("demos", {})))

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        return cls.from_dict(tomllib.loads(text))

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_toml(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_toml())


def _strip_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def resolve(env_id: str | None, algorithm: str, user: dict | None = None, overrides: dict | None = None,
            seeds=None, demo_overrides: dict | None = None) -> RunConfig:
    """Merge env defaults, a user config dict and explicit overrides."""
    user = dict(user or {})
    env_id = env_id or user.get("env")
    if env_id is None:
        raise ConfigurationError("no environment given (use --env or set env in the config file)")
    if user.get("env") is not None and envs.canonical_id(user["env"]) != envs.canonical_id(env_id):
        raise ConfigurationError(f"config file is for {user['env']}, not {env_id}")
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}")
    base = defaults(env_id)
    allowed = settings_fields(algorithm)
    settings: dict = {}
    for layer in (base.get("policy", {}), base.get(algorithm, {}),
                  user.get("policy", {}), user.get(algorithm, {}), user.get("settings", {})):
        settings.update({k: v for k, v in layer.items() if k in allowed})
    for layer in (user.get("policy", {}), user.get(algorithm, {}), user.get("settings", {})):
        unknown = set(layer) - allowed
        if unknown:
            raise ConfigurationError(f"unknown {algorithm} settings: {sorted(unknown)}")
    settings.update(overrides or {})
    demos = {**base.get("demos", {}), **user.get("demos", {}), **_strip_none(demo_overrides or {})}
    if seeds is None:
        seeds = user.get("seeds", [0])
    return RunConfig(env_id, algorithm, list(seeds), settings, demos)
