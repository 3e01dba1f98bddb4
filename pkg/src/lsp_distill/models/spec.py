"""
Model specifications and the named teacher/student presets.
"""
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List

from ..core.exceptions import ConfigError

MODEL_KINDS = ("gat", "dgcnn")
READOUT_MODES = ("max", "mean")


@dataclass
class ModelSpec:
    """
    Architecture of a GAT or DGCNN model.

    For ``gat`` the widths are per-head hidden sizes, the last one being the
    number of output classes (the last layer averages its heads, the others
    concatenate). For ``dgcnn`` the widths are the EdgeConv output sizes, and
    ``mlp`` lists the hidden classifier widths after the global readout.
    """
    kind: str
    in_dim: int
    num_classes: int
    widths: List[int]
    heads: List[int] = field(default_factory=list)
    residual: List[bool] = field(default_factory=list)
    k: int = 20
    mlp: List[int] = field(default_factory=list)
    readout: List[str] = field(default_factory=lambda: ["max", "mean"])
    dropout: float = 0.0
    negative_slope: float = 0.2
    name: str = ""

    def __post_init__(self) -> None:
        self.validate()

    @property
    def num_layers(self) -> int:
        return len(self.widths)

    def validate(self) -> None:
        """
        Raises:
            ConfigError: Naming the offending field
        """
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model.kind must be one of {list(MODEL_KINDS)}, got {self.kind!r}")
        if self.in_dim < 1 or self.num_classes < 1:
            raise ConfigError("model.in_dim and model.num_classes must be positive")
        if not self.widths or any(w < 1 for w in self.widths):
            raise ConfigError(f"model.widths must be non-empty and positive, got {self.widths}")
        if any(w < 1 for w in self.mlp):
            raise ConfigError(f"model.mlp widths must be positive, got {self.mlp}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"model.dropout must be in [0, 1), got {self.dropout}")
        if self.kind == "gat":
            if len(self.heads) != len(self.widths) or any(h < 1 for h in self.heads):
                raise ConfigError("model.heads must give a positive head count per layer")
            if self.residual and len(self.residual) != len(self.widths):
                raise ConfigError("model.residual must give one flag per layer")
            if self.widths[-1] != self.num_classes:
                raise ConfigError(
                    f"model.widths[-1] ({self.widths[-1]}) must equal num_classes ({self.num_classes})"
                )
        else:
            if self.k < 1:
                raise ConfigError(f"model.k must be positive, got {self.k}")
            if not self.readout or any(mode not in READOUT_MODES for mode in self.readout):
                raise ConfigError(f"model.readout must be a non-empty subset of {list(READOUT_MODES)}")

    def residual_flags(self) -> List[bool]:
        return list(self.residual) if self.residual else [False] * len(self.widths)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelSpec":
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"invalid model spec: {e}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


def count_parameters(spec: ModelSpec) -> int:
    """Closed-form trainable parameter count of a spec."""
    total = 0
    if spec.kind == "gat":
        fin = spec.in_dim
        for i, (width, heads) in enumerate(zip(spec.widths, spec.heads)):
            last = i == spec.num_layers - 1
            projected = heads * width
            out = width if last else projected
            total += fin * projected + 2 * projected + out
            if spec.residual_flags()[i]:
                total += fin * projected + projected
            fin = out
        return total

    fin = spec.in_dim
    for width in spec.widths:
        total += 2 * fin * width + width
        fin = width
    fin *= len(spec.readout)
    for width in spec.mlp + [spec.num_classes]:
        total += fin * width + width
        fin = width
    return total


def gat_teacher(in_dim: int = 50, num_classes: int = 121) -> ModelSpec:
    """Three GAT layers, heads 4,4,6, hidden 256,256,classes, residual everywhere."""
    return ModelSpec(kind="gat", in_dim=in_dim, num_classes=num_classes,
                     widths=[256, 256, num_classes], heads=[4, 4, 6],
                     residual=[True, True, True], name="gat-teacher")


def gat_student(in_dim: int = 50, num_classes: int = 121) -> ModelSpec:
    """Five GAT layers, two heads each, hidden 68, residual on hidden layers."""
    return ModelSpec(kind="gat", in_dim=in_dim, num_classes=num_classes,
                     widths=[68, 68, 68, 68, num_classes], heads=[2] * 5,
                     residual=[True, True, True, True, False], name="gat-student")


def dgcnn_teacher(in_dim: int = 3, num_classes: int = 40) -> ModelSpec:
    return ModelSpec(kind="dgcnn", in_dim=in_dim, num_classes=num_classes,
                     widths=[64, 64, 128, 256, 1024], mlp=[512, 256], k=20,
                     name="dgcnn-teacher")


def dgcnn_student(in_dim: int = 3, num_classes: int = 40) -> ModelSpec:
    return ModelSpec(kind="dgcnn", in_dim=in_dim, num_classes=num_classes,
                     widths=[32, 32, 64, 128], mlp=[256], k=10, name="dgcnn-student")


def dgcnn_teacher_desk(in_dim: int = 3, num_classes: int = 4) -> ModelSpec:
    """dgcnn-teacher with every width divided by four."""
    return ModelSpec(kind="dgcnn", in_dim=in_dim, num_classes=num_classes,
                     widths=[16, 16, 32, 64, 256], mlp=[128, 64], k=20,
                     name="dgcnn-teacher-desk")


def dgcnn_student_desk(in_dim: int = 3, num_classes: int = 4) -> ModelSpec:
    """dgcnn-student with every width divided by four."""
    return ModelSpec(kind="dgcnn", in_dim=in_dim, num_classes=num_classes,
                     widths=[8, 8, 16, 32], mlp=[64], k=10, name="dgcnn-student-desk")


def dgcnn_student_more_channels(in_dim: int = 3, num_classes: int = 40) -> ModelSpec:
    return ModelSpec(kind="dgcnn", in_dim=in_dim, num_classes=num_classes,
                     widths=[64, 64, 128, 256], mlp=[256], k=10,
                     name="dgcnn-student-more-channels")


def dgcnn_student_more_layers(in_dim: int = 3, num_classes: int = 40) -> ModelSpec:
    return ModelSpec(kind="dgcnn", in_dim=in_dim, num_classes=num_classes,
                     widths=[32, 32, 64, 64, 128], mlp=[256], k=10,
                     name="dgcnn-student-more-layers")


def dgcnn_student_more_mlps(in_dim: int = 3, num_classes: int = 40) -> ModelSpec:
    return ModelSpec(kind="dgcnn", in_dim=in_dim, num_classes=num_classes,
                     widths=[32, 32, 64, 128], mlp=[512, 256], k=10,
                     name="dgcnn-student-more-mlps")


PRESETS: Dict[str, Callable[..., ModelSpec]] = {
    "gat-teacher": gat_teacher,
    "gat-student": gat_student,
    "dgcnn-teacher": dgcnn_teacher,
    "dgcnn-student": dgcnn_student,
    "dgcnn-teacher-desk": dgcnn_teacher_desk,
    "dgcnn-student-desk": dgcnn_student_desk,
    "dgcnn-student-more-channels": dgcnn_student_more_channels,
    "dgcnn-student-more-layers": dgcnn_student_more_layers,
    "dgcnn-student-more-mlps": dgcnn_student_more_mlps,
}


def preset(name: str, in_dim: int, num_classes: int) -> ModelSpec:
    """
    Raises:
        ConfigError: For an unknown preset name
    """
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown model preset {name!r}; choose from {sorted(PRESETS)}")
    return factory(in_dim=in_dim, num_classes=num_classes)
