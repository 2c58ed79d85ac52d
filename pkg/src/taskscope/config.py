"""Deployment configuration: one file holding trust, backend, transport, paths.

Resolution order for the config path: explicit flag > TASKSCOPE_CONFIG env
var > ./taskscope.json.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

DEFAULT_CONFIG_NAME = "taskscope.json"
CONFIG_ENV = "TASKSCOPE_CONFIG"

DEFAULT_COST_TABLE = {
    "fixture-model": {"prompt_per_1k": "0.00025", "completion_per_1k": "0.002"},
}


@dataclass
class Config:
    path: Path
    trust: dict[str, Any] = field(default_factory=dict)       # {"user": hex, "services": {name: hex}}
    keys_dir: str = "keys"
    backend: dict[str, Any] = field(default_factory=lambda: {"kind": "fixture"})
    cost_table: dict[str, dict[str, str]] = field(default_factory=lambda: dict(DEFAULT_COST_TABLE))
    transport: dict[str, Any] = field(default_factory=lambda: {
        "host": "127.0.0.1",
        "gateway_http_port": 8642,
        "gateway_msg_port": 8643,
        "service_ports": {},
    })
    suites_root: str | None = None
    results_dir: str = "results"
    artifacts_dir: str = "artifacts"

    @property
    def base_dir(self) -> Path:
        return self.path.parent

    def resolve(self, relative: str) -> Path:
        p = Path(relative)
        return p if p.is_absolute() else self.base_dir / p

    def to_doc(self) -> dict:
        return {
            "trust": self.trust,
            "keys_dir": self.keys_dir,
            "backend": self.backend,
            "cost_table": self.cost_table,
            "transport": self.transport,
            "suites_root": self.suites_root,
            "results_dir": self.results_dir,
            "artifacts_dir": self.artifacts_dir,
        }

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.to_doc(), indent=2, sort_keys=True) + "\n")


def config_path(explicit: str | None = None) -> Path:
    if explicit:
        return Path(explicit)
    env = os.environ.get(CONFIG_ENV)
    if env:
        return Path(env)
    return Path.cwd() / DEFAULT_CONFIG_NAME


def load_config(explicit: str | None = None) -> Config:
    path = config_path(explicit)
    if not path.exists():
        return Config(path=path)
    doc = json.loads(path.read_text())
    cfg = Config(path=path)
    for name in ("trust", "keys_dir", "backend", "cost_table", "transport",
                 "suites_root", "results_dir", "artifacts_dir"):
        if name in doc:
            setattr(cfg, name, doc[name])
    return cfg
