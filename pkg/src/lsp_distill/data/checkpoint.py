"""
Binary model checkpoints.

Layout (little-endian)::

    b"LSPD"  u32 version
    u32 len  spec JSON (UTF-8)
    u32 count
    count × [u32 len, name (UTF-8), u32 rank, rank × u64 dim, float32 values]
"""
import struct
from pathlib import Path
from typing import BinaryIO, Dict, Tuple, Union

import numpy as np

from ..core.exceptions import CheckpointFormatError, CheckpointIntegrityError, ConfigError
from ..core.logger import logger
from ..models import ModelSpec, build_model

MAGIC = b"LSPD"
VERSION = 1

PathLike = Union[str, Path]


def _write_bytes(f: BinaryIO, payload: bytes) -> None:
    f.write(struct.pack("<I", len(payload)))
    f.write(payload)


def save_checkpoint(path: PathLike, spec: ModelSpec, params: Dict[str, np.ndarray]) -> Path:
    """Write ``spec`` and the named float32 parameter arrays."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        _write_bytes(f, spec.to_json().encode("utf-8"))
        f.write(struct.pack("<I", len(params)))
        for name, value in params.items():
            array = np.ascontiguousarray(value, dtype="<f4")
            _write_bytes(f, name.encode("utf-8"))
            f.write(struct.pack("<I", array.ndim))
            f.write(struct.pack(f"<{array.ndim}Q", *array.shape))
            f.write(array.tobytes())
    logger.debug(f"Saved checkpoint {path} ({len(params)} tensors)")
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointFormatError(f"{self.path}: truncated at byte {self.offset}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def text(self) -> str:
        try:
            return self.take(self.u32()).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointFormatError(f"{self.path}: invalid UTF-8 near byte {self.offset}")


def load_checkpoint(path: PathLike) -> Tuple[ModelSpec, Dict[str, np.ndarray]]:
    """
    Raises:
        CheckpointFormatError: For bad magic, unknown version or truncation
        CheckpointIntegrityError: If tensors disagree with the stored spec
    """
    path = Path(path)
    try:
        reader = _Reader(path.read_bytes(), path)
    except OSError as e:
        raise CheckpointFormatError(f"{path}: {e}")
    if reader.take(4) != MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint (bad magic)")
    version = reader.u32()
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")
    try:
        spec = ModelSpec.from_json(reader.text())
    except (ValueError, ConfigError) as e:
        raise CheckpointFormatError(f"{path}: invalid model spec: {e}")

    params: Dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.text()
        rank = reader.u32()
        shape = struct.unpack(f"<{rank}Q", reader.take(8 * rank))
        count = int(np.prod(shape, dtype=np.int64))
        params[name] = np.frombuffer(reader.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)
    if reader.offset != len(reader.data):
        raise CheckpointFormatError(f"{path}: {len(reader.data) - reader.offset} trailing bytes")

    expected = build_model(spec).state_dict()
    for name, value in expected.items():
        if name not in params:
            raise CheckpointIntegrityError(f"{path}: tensor {name} missing for spec {spec.name or spec.kind}")
        if params[name].shape != value.shape:
            raise CheckpointIntegrityError(
                f"{path}: tensor {name} has shape {params[name].shape}, spec implies {value.shape}"
            )
    extra = sorted(set(params) - set(expected))
    if extra:
        raise CheckpointIntegrityError(f"{path}: tensors {extra[:5]} are not part of the spec")
    logger.debug(f"Loaded checkpoint {path} ({spec.name or spec.kind})")
    return spec, params


def load_model(path: PathLike, seed: int = 0):
    """Checkpoint as a ready model."""
    spec, params = load_checkpoint(path)
    model = build_model(spec, seed=seed)
    model.load_state_dict(params)
    return model
