"""Run configuration and reproducibility manifests."""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, _kernels


@dataclass
class RunConfig:
    """Every setting a CLI run depends on.

    Round-trips through a plain JSON file; unknown keys are rejected.
    """

    input: list[str] = field(default_factory=list)
    fixture: str | None = None
    format: str = "csv"
    sex: str = "total"
    radix: float = 100_000.0
    start: int | None = None
    end: int | None = None
    kappa: float = 0.0
    kappa_grid: str | None = None
    kappa_file: str | None = None
    k: str = "6"
    max_k: int | None = None
    score_on: str = "unweighted"
    horizons: int = 10
    close: bool = True
    B: int = 1000
    seed: int = 0
    nu: list[float] = field(default_factory=list)
    plan: str = "2000:2010:2020"
    segment: str = "validation"
    criterion: str = "kld"
    fit_start: int | None = None
    ages: str = "60:105:5"
    maturities: str = "5:30:5"
    rate: float = 0.03
    threads: int = 1
    out: str = "out"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def k_rule(self):
        return "evr" if str(self.k).lower() == "evr" else int(self.k)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, config: RunConfig, inputs: dict) -> Path:
    """Write ``config.json`` and ``manifest.json`` beside the outputs."""
    out_dir = Path(out_dir)
    (out_dir / "config.json").write_text(config.to_json(), encoding="utf-8")
    manifest = {
        "command": command,
        "config": asdict(config),
        "seed": config.seed,
        "inputs": {name: sha256_file(p) for name, p in sorted(inputs.items())},
        "versions": {
            "wcoda": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "kernel_backend": _kernels.BACKEND,
        },
        "notes": {
            "zero_repair": "cells below 1e-6 floored, rows closed to the radix",
            "closure": (
                "forecast curves rescaled to sum to the radix"
                if config.close
                else "forecast curves left unscaled"
            ),
            "scores": f"scores computed on the {config.score_on} clr series",
        },
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
