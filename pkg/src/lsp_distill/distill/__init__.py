"""
Distillation losses: local structure preserving plus the KD, FitNet and AT
baselines.
"""
from .baselines import FitNetMapper, at_loss, attention_map, fitnet_loss, kd_loss
from .distillers import (
    DISTILLER_REGISTRY,
    AtDistiller,
    Distiller,
    DistillerConfig,
    FitNetDistiller,
    KdDistiller,
    LossTerms,
    LspDistiller,
    NoDistiller,
    build_distiller,
)
from .kernels import KernelChoice, edge_similarity, kernel_eval
from .lsp import (
    LocalStructureSet,
    LspPairing,
    kl_per_node,
    kl_per_node_all,
    local_structure,
    lsp_loss,
    paired_lsp_loss,
    parse_pairs,
    structure_divergence,
    total_loss,
)

__all__ = [
    "AtDistiller",
    "DISTILLER_REGISTRY",
    "Distiller",
    "DistillerConfig",
    "FitNetDistiller",
    "FitNetMapper",
    "KdDistiller",
    "KernelChoice",
    "LocalStructureSet",
    "LossTerms",
    "LspDistiller",
    "LspPairing",
    "NoDistiller",
    "at_loss",
    "attention_map",
    "build_distiller",
    "edge_similarity",
    "fitnet_loss",
    "kd_loss",
    "kernel_eval",
    "kl_per_node",
    "kl_per_node_all",
    "local_structure",
    "lsp_loss",
    "paired_lsp_loss",
    "parse_pairs",
    "structure_divergence",
    "total_loss",
]
