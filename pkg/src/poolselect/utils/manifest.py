import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

MANIFEST_SCHEMA = 'poolselect.manifest/1'

PathLike = Union[str, Path]


def file_digest(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def manifest_path(output: PathLike) -> Path:
    """Companion manifest for ``output``: report.json -> report.manifest.json."""
    output = Path(output)
    return output.with_name(f"{output.stem}.manifest.json")


@dataclass
class RunManifest:
    """Everything needed to re-run a command and check its outputs."""

    command: str
    config: dict
    seed: Optional[int]
    version: str
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec='seconds'))

    def add_inputs(self, paths: Iterable[PathLike]) -> None:
        for path in paths:
            self.inputs[str(path)] = file_digest(path)

    def add_outputs(self, paths: Iterable[PathLike]) -> None:
        for path in paths:
            self.outputs[str(path)] = file_digest(path)

    def to_dict(self) -> dict:
        return {'schema': MANIFEST_SCHEMA, **asdict(self)}

    def write(self, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')
        return path
