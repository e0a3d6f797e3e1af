"""Run manifest: everything needed to repeat a CLI run byte for byte."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, ValidationError

from sqzlab import __version__
from sqzlab.artifacts.traces import file_digest, write_json
from sqzlab.errors import ConfigSchemaError, InconsistentDataError

MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    """Record of one command: resolved configuration, seed, input digests and outputs.

    ``outputs`` maps an artifact name to its file name relative to the manifest;
    ``output_digests`` holds the SHA-256 of each output so a replay can be compared.
    """

    command: str = Field(..., description="CLI command, e.g. 'simulate'")
    options: dict[str, Any] = Field(default_factory=dict, description="Command options")
    config: Optional[dict[str, Any]] = Field(default=None, description="Resolved configuration")
    seed: Optional[int] = None
    artifact_version: str = __version__
    inputs: dict[str, str] = Field(default_factory=dict, description="Input path -> SHA-256")
    outputs: dict[str, str] = Field(default_factory=dict)
    output_digests: dict[str, str] = Field(default_factory=dict)
    results: dict[str, Any] = Field(default_factory=dict, description="Headline numbers")

    @classmethod
    def for_inputs(cls, command: str, inputs: list[Path], **fields: Any) -> "RunManifest":
        return cls(
            command=command,
            inputs={path.as_posix(): file_digest(path) for path in inputs},
            **fields,
        )

    def with_outputs(self, outputs: dict[str, Path], root: Path) -> "RunManifest":
        """Copy with ``outputs`` recorded relative to ``root`` and their digests."""
        names = {name: path.relative_to(root).as_posix() for name, path in outputs.items()}
        digests = {name: file_digest(path) for name, path in outputs.items()}
        return self.model_copy(update={"outputs": names, "output_digests": digests})

    def check_inputs(self) -> None:
        """Verify that recorded inputs still have their recorded digests.

        Raises:
            InconsistentDataError: If an input is missing or changed
        """
        for name, expected in self.inputs.items():
            path = Path(name)
            if not path.exists():
                raise InconsistentDataError(f"Recorded input {name} is missing")
            if file_digest(path) != expected:
                raise InconsistentDataError(f"Recorded input {name} changed since the run")

    def differing_outputs(self, other: "RunManifest") -> list[str]:
        """Names of outputs whose digests differ from ``other``."""
        names = sorted(set(self.output_digests) | set(other.output_digests))
        return [n for n in names if self.output_digests.get(n) != other.output_digests.get(n)]


def write_manifest(manifest: RunManifest, output_dir: Path) -> Path:
    return write_json(output_dir / MANIFEST_NAME, manifest.model_dump(mode="json"))


def read_manifest(path: Path) -> RunManifest:
    """Load a manifest file.

    Raises:
        ConfigSchemaError: If the file is not a valid manifest
    """
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigSchemaError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigSchemaError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        return RunManifest.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        key_path = ".".join(str(part) for part in first["loc"])
        raise ConfigSchemaError(first["msg"], key_path) from exc
