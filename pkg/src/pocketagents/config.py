"""Run configuration and the reproducibility manifest."""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping


class ConfigError(ValueError):
    pass


_DEFAULTS: dict[str, Any] = {
    "dataset": None,
    "device_states": None,
    "catalog": None,  # None -> bundled default catalog
    "backend": {"type": "oracle"},
    "prompt_mode": "full_text",
    "k": 5,
    "max_steps": 20,
    "include_instruction": True,
    "baseline_mode": False,
    "similarity": {"type": "trigram"},
    "threshold": 0.7,
    "averaging": "macro",
    "output_dir": "out",
    "seed": 7,
    "jobs": 1,
    "released": False,
}

_PATH_KEYS = ("dataset", "device_states", "catalog")


@dataclass
class RunConfig:
    values: dict[str, Any] = field(default_factory=lambda: dict(_DEFAULTS))

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    @classmethod
    def load(cls, path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> "RunConfig":
        values = dict(_DEFAULTS)
        if path is not None:
            try:
                doc = json.loads(Path(path).read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
            unknown = set(doc) - set(_DEFAULTS)
            if unknown:
                raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
            values.update(doc)
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        config = cls(values)
        config.validate()
        return config

    def validate(self) -> None:
        for key in _PATH_KEYS:
            value = self.values.get(key)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{key} path does not exist: {value}")
        backend = self.values["backend"]
        if backend.get("type") not in ("oracle", "http"):
            raise ConfigError(f"backend.type must be oracle or http, got {backend.get('type')!r}")
        if backend.get("type") == "http" and not backend.get("endpoint"):
            raise ConfigError("http backend needs an endpoint")
        if self.values["prompt_mode"] not in ("full_text", "compressed", "retrieved"):
            raise ConfigError(f"unknown prompt_mode {self.values['prompt_mode']!r}")
        if self.values["averaging"] not in ("macro", "micro"):
            raise ConfigError(f"unknown averaging {self.values['averaging']!r}")
        if int(self.values["max_steps"]) < 1:
            raise ConfigError("max_steps must be >= 1")
        if int(self.values["jobs"]) < 1:
            raise ConfigError("jobs must be >= 1")

    def config_hash(self) -> str:
        """Hash of everything that determines results. Output location and
        scheduling width are excluded: they never change the artifacts.
        """
        hashed = {k: v for k, v in self.values.items() if k not in ("output_dir", "jobs")}
        canonical = json.dumps(hashed, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    versions: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)  # file name -> sha256

    @classmethod
    def start(cls, config: RunConfig) -> "RunManifest":
        from . import __version__

        return cls(
            config_hash=config.config_hash(),
            versions={"pocketagents": __version__, "python": platform.python_version()},
        )

    def register_output(self, path: Path) -> None:
        self.outputs[path.name] = file_sha256(path)

    def save(self, path: Path) -> None:
        doc = {
            "format_version": 1,
            "config_hash": self.config_hash,
            "versions": self.versions,
            "timings": self.timings,
            "outputs": self.outputs,
        }
        path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
