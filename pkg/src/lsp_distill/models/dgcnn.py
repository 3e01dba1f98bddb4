"""
Dynamic graph CNN for point cloud classification.

Every EdgeConv layer rebuilds a kNN graph on its own input features, so the
graph of layer 0 is built from coordinates and later graphs from learned
features.
"""
from typing import Dict, Optional

import numpy as np

from ..core.exceptions import ShapeError
from ..graph import batched_knn_graph
from ..tensor import Tensor, ops
from .base_model import BaseGraphModel, ModelOutput
from .layers import EdgeConvLayer, Linear, global_pool


class DgcnnModel(BaseGraphModel):
    """EdgeConv stack, global max/mean readout and an MLP classifier."""

    kind = "dgcnn"

    def _build(self, rng: np.random.Generator) -> None:
        spec = self.spec
        self.convs = []
        fin = spec.in_dim
        for i, width in enumerate(spec.widths):
            self.convs.append(EdgeConvLayer(fin, width, rng, name=f"edgeconv{i}",
                                            negative_slope=spec.negative_slope))
            fin = width
        fin *= len(spec.readout)
        self.mlp = []
        for i, width in enumerate(spec.mlp + [spec.num_classes]):
            self.mlp.append(Linear(fin, width, rng, name=f"mlp{i}"))
            fin = width

    def parameters(self) -> Dict[str, Tensor]:
        params: Dict[str, Tensor] = {}
        for layer in self.convs + self.mlp:
            params.update(layer.parameters())
        return params

    def forward(self, points, batch: Optional[np.ndarray] = None) -> ModelOutput:
        """
        Args:
            points: (B, n, in_dim) clouds, or (n, in_dim) for one cloud
            batch: optional cloud id per row when ``points`` is already flat

        Returns:
            ModelOutput with one logits row per cloud; per-layer features are
            flattened over clouds (row ``b * n + p``)
        """
        data = points.data if isinstance(points, Tensor) else np.asarray(points, dtype=np.float32)
        if data.ndim == 3:
            num_clouds, n, dim = data.shape
            data = data.reshape(num_clouds * n, dim)
            batch = np.repeat(np.arange(num_clouds), n)
        elif data.ndim == 2:
            if batch is None:
                batch = np.zeros(data.shape[0], dtype=np.int64)
            num_clouds = int(np.max(batch)) + 1
        else:
            raise ShapeError(f"dgcnn: expected (B, n, {self.spec.in_dim}) points, got {data.shape}")

        x = Tensor(data)
        out = ModelOutput(logits=x, batch=batch)
        for conv in self.convs:
            g = batched_knn_graph(x, self.spec.k, batch)
            x = conv(x, g)
            out.features.append(x)
            out.graphs.append(g)

        pooled = [global_pool(x, mode, batch, num_clouds) for mode in self.spec.readout]
        h = pooled[0] if len(pooled) == 1 else ops.concat_cols(pooled)
        for i, layer in enumerate(self.mlp):
            h = layer(h)
            if i < len(self.mlp) - 1:
                h = ops.leaky_relu(h, self.spec.negative_slope)
                h = ops.dropout(h, self.spec.dropout, self._dropout_rng, self.training)
        out.logits = h
        return out
