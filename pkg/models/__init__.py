from models.model import ModelInstance, build_model, forward, majority_vote, predict, rebind_graph
from models.spec import ALL_FAMILIES, Detection, Family, ModelSpec, build_spec

__all__ = [
    "ALL_FAMILIES",
    "Detection",
    "Family",
    "ModelInstance",
    "ModelSpec",
    "build_model",
    "build_spec",
    "forward",
    "majority_vote",
    "predict",
    "rebind_graph",
]
