"""Run manifests written next to every output file."""

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from dioph_spectrum.errors import IoError

MANIFEST_SUFFIX = ".manifest.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """What produced an output file.

    ``inputs`` holds the command's arguments; commands that derive constants
    (construct) add them under ``derived``.
    """

    command: str
    inputs: dict[str, Any]
    tool_version: str
    seed: int = 0
    derived: dict[str, str] = field(default_factory=dict)
    timestamp: str = field(default_factory=_now)

    def comparable(self) -> dict[str, Any]:
        """Everything except the timestamp."""
        data = asdict(self)
        data.pop("timestamp")
        return data

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def manifest_path(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


def write_manifest(manifest: RunManifest, output: str | Path) -> Path:
    """Write ``<output>.manifest.json`` and return its path."""
    path = manifest_path(output)
    try:
        path.write_text(manifest.to_json())
    except OSError as e:
        raise IoError(f"Cannot write manifest {path}: {e}") from e
    return path


def read_manifest(output: str | Path) -> RunManifest:
    path = manifest_path(output)
    try:
        return RunManifest.from_json(path.read_text())
    except OSError as e:
        raise IoError(f"Cannot read manifest {path}: {e}") from e
