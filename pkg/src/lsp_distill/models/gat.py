"""
Graph attention network for node classification.
"""
from typing import Dict

import numpy as np

from ..graph import Graph, add_self_loops
from ..tensor import Tensor, as_tensor, ops
from .base_model import BaseGraphModel, ModelOutput
from .layers import GatLayer


class GatModel(BaseGraphModel):
    """
    Stack of GAT layers; hidden layers concatenate heads and pass through
    ELU, the last layer averages its heads and its output is the logits.
    """

    kind = "gat"

    def _build(self, rng: np.random.Generator) -> None:
        spec = self.spec
        self.layers = []
        fin = spec.in_dim
        for i, (width, heads, residual) in enumerate(
            zip(spec.widths, spec.heads, spec.residual_flags())
        ):
            last = i == spec.num_layers - 1
            layer = GatLayer(fin, width, heads, rng, name=f"gat{i}", concat=not last,
                             residual=residual, negative_slope=spec.negative_slope)
            self.layers.append(layer)
            fin = layer.output_width

    def parameters(self) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = {}
        for layer in self.layers:
            params.update(layer.parameters())
        return params

    def forward(self, features, graph: Graph) -> ModelOutput:
        """
        Args:
            features: n×in_dim node features
            graph: node graph; self-loops are added when missing
        """
        g = add_self_loops(graph)
        x = as_tensor(features)
        out = ModelOutput(logits=x)
        for i, layer in enumerate(self.layers):
            x = ops.dropout(x, self.spec.dropout, self._dropout_rng, self.training)
            x, attention = layer(x, g)
            if i < len(self.layers) - 1:
                x = ops.elu(x)
            out.features.append(x)
            out.graphs.append(g)
            out.attention.append(attention)
        out.logits = x
        return out
