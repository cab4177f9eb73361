# /api_models.py
"""
Pydantic models for the FastAPI application.
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class DetectRequest(BaseModel):
    """One window of PMU measurements to classify with a stored checkpoint."""
    checkpoint: str = Field(description="checkpoint stem, relative to CHECKPOINT_DIR")
    pmu_buses: List[int] = Field(min_length=1)
    # features[node][timestep][feature], nodes in pmu_buses order
    features: List[List[List[float]]]
    normalized: bool = False


class DetectResponse(BaseModel):
    """Graph-level decision; GRU_LOCAL also returns every node's logit."""
    checkpoint: str
    family: str
    pmu_buses: List[int]
    logits: List[float]
    probability: float
    detection: str


class StatusResponse(BaseModel):
    status: str
    message: str
    version: Optional[str] = None


class PmuConfigsResponse(BaseModel):
    configs: Dict[int, List[int]]
