from .features import PrimitiveEmbeddings, primitive_embed, sparse_mask, feature_width
from .network import EgateLayer, HyperParams, PolicyNetwork, build_model
from .checkpoint import (
    load_checkpoint,
    load_model,
    load_model_expecting,
    model_tensors,
    save_checkpoint,
    save_model,
)
from .operator import NeuralOperator

__all__ = [
    "PrimitiveEmbeddings",
    "primitive_embed",
    "sparse_mask",
    "feature_width",
    "EgateLayer",
    "HyperParams",
    "PolicyNetwork",
    "build_model",
    "save_checkpoint",
    "load_checkpoint",
    "save_model",
    "load_model",
    "load_model_expecting",
    "model_tensors",
    "NeuralOperator",
]
