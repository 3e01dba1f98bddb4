"""
Run manifests: everything needed to re-run a command and check its outputs.
"""
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union

from .. import __version__
from ..core.exceptions import DataError
from ..core.logger import logger

MANIFEST_NAME = "manifest.json"

PathLike = Union[str, Path]


def file_digest(path: PathLike) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()


def content_hash(path: PathLike) -> str:
    """
    SHA-256 of a file, or of a directory tree: sorted ``relative path`` and
    file digest pairs, so renames and edits both change the hash.

    Raises:
        DataError: If the path does not exist
    """
    path = Path(path)
    if path.is_file():
        return file_digest(path)
    if not path.is_dir():
        raise DataError(f"{path}: cannot hash a missing input")
    sha = hashlib.sha256()
    for item in sorted(p for p in path.rglob("*") if p.is_file()):
        sha.update(item.relative_to(path).as_posix().encode("utf-8"))
        sha.update(b"\0")
        sha.update(file_digest(item).encode("ascii"))
        sha.update(b"\n")
    return sha.hexdigest()


def _plain(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value.resolve())
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


@dataclass
class RunManifest:
    """
    Command, parameters, resolved configuration, input hashes and output
    artifacts of one CLI run.

    Output paths are stored relative to the run directory. Outputs marked
    reproducible carry a hash that a replay must match byte for byte.
    """
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    inputs: Dict[str, Dict[str, str]] = field(default_factory=dict)
    outputs: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    models: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    version: str = __version__

    def __post_init__(self) -> None:
        self.params = _plain(self.params)

    def add_input(self, name: str, path: PathLike) -> None:
        path = Path(path)
        self.inputs[name] = {"path": str(path.resolve()), "sha256": content_hash(path)}

    def add_output(self, name: str, path: PathLike, out_dir: PathLike,
                   reproducible: bool = True) -> None:
        path = Path(path)
        entry: Dict[str, Any] = {"path": path.resolve().relative_to(Path(out_dir).resolve()).as_posix()}
        if reproducible:
            entry["sha256"] = content_hash(path)
        self.outputs[name] = entry

    def changed_inputs(self) -> List[str]:
        """Names of inputs that are missing or whose content changed since the run."""
        changed = []
        for name, entry in self.inputs.items():
            path = Path(entry["path"])
            if not path.exists() or content_hash(path) != entry["sha256"]:
                changed.append(name)
        return changed

    def mismatched_outputs(self, other: "RunManifest") -> List[str]:
        """Reproducible outputs of this run whose hash differs in ``other``."""
        mismatched = []
        for name, entry in self.outputs.items():
            if "sha256" not in entry:
                continue
            if other.outputs.get(name, {}).get("sha256") != entry["sha256"]:
                mismatched.append(name)
        return mismatched

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write(self, out_dir: PathLike) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        logger.debug(f"Wrote manifest {path}")
        return path

    @classmethod
    def load(cls, path: PathLike) -> "RunManifest":
        """
        Args:
            path: A manifest file or the run directory holding one

        Raises:
            DataError: If the manifest is missing or malformed
        """
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        try:
            with open(path, "r") as f:
                data = json.load(f)
            return cls(**data)
        except OSError as e:
            raise DataError(f"{path}: {e}")
        except (json.JSONDecodeError, TypeError) as e:
            raise DataError(f"{path}: not a run manifest ({e})")


def run_directory(path: PathLike) -> Path:
    """The directory a manifest file (or run directory) belongs to."""
    path = Path(path)
    return path if path.is_dir() else path.parent
