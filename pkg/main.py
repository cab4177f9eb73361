# /main.py
"""
FastAPI detection service over trained checkpoints.
"""
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Dict, Tuple

import numpy as np
import uvicorn
from fastapi import FastAPI, HTTPException

from api_models import DetectRequest, DetectResponse, PmuConfigsResponse, StatusResponse
from config.presets import presets
from config.settings import settings
from engine.tensor import no_grad
from grid.pmu_graph import induce_pmu_graph
from grid.topology import Topology
from models.model import ModelInstance
from models.spec import Detection, Family
from storage.checkpoint import CheckpointPaths, load_checkpoint, load_stats
from utils.errors import FaultDetectionError
from utils.logger import setup_logger

logger = setup_logger(__name__)

# Loaded checkpoints keyed by resolved stem
_models: Dict[str, Tuple[ModelInstance, dict]] = {}
_topology: Dict[str, Topology] = {}


@asynccontextmanager
async def lifespan(app: FastAPI):
    _topology["feeder"] = presets.topology()
    logger.info("FastAPI application startup complete.")
    yield
    _models.clear()
    logger.info("FastAPI application shutdown.")


app = FastAPI(
    title="PMU Fault Detection API",
    description="Detects line-to-ground faults from PMU windows with RNN and RNN+GNN models.",
    version=settings.APP_VERSION,
    lifespan=lifespan,
)


def _resolve(checkpoint: str) -> Path:
    stem = Path(checkpoint)
    if not stem.is_absolute():
        stem = settings.CHECKPOINT_DIR / stem
    paths = CheckpointPaths.for_stem(stem)
    if not paths.data.exists() or not paths.manifest.exists():
        raise HTTPException(status_code=404, detail=f"Checkpoint not found: {checkpoint}")
    return paths.data.with_suffix("")


def _load(stem: Path) -> Tuple[ModelInstance, dict]:
    key = str(stem)
    if key not in _models:
        _models[key] = load_checkpoint(stem)
        logger.info(f"Loaded checkpoint {stem.name}")
    return _models[key]


# --- Detection Endpoints ---

@app.post("/detect", response_model=DetectResponse, tags=["Detection"])
async def detect(request: DetectRequest) -> DetectResponse:
    """
    Classify one window. The model is rebound to the PMU graph induced by
    `pmu_buses` on the bundled feeder; raw features are Z-scored with the
    statistics stored in the checkpoint.
    """
    stem = _resolve(request.checkpoint)
    buses = sorted(request.pmu_buses)
    if buses != list(request.pmu_buses) or len(set(buses)) != len(buses):
        raise HTTPException(status_code=400, detail="pmu_buses must be unique and ascending")
    try:
        model, manifest = _load(stem)
        features = np.asarray(request.features, dtype=np.float64)
        if features.ndim != 3 or features.shape[0] != len(buses) or features.shape[2] != model.spec.input_dim:
            raise HTTPException(
                status_code=400,
                detail=f"features must be {len(buses)} x S x {model.spec.input_dim}, got {list(features.shape)}",
            )
        if not request.normalized:
            stats = load_stats(manifest)
            if stats is None:
                raise HTTPException(status_code=400, detail="checkpoint has no normalization statistics")
            features = stats.apply(features)
        graph = induce_pmu_graph(_topology.get("feeder") or presets.topology(), buses)
        bound = model.rebind_graph(graph)
        with no_grad():
            logits = bound.forward(features, training=False).data
    except HTTPException:
        raise
    except FaultDetectionError as e:
        logger.warning(f"Rejected detection request: {str(e)}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error during detection: {str(e)}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Error during detection: {str(e)}")

    flat = np.atleast_1d(logits)
    if model.spec.family == Family.GRU_LOCAL:
        fault = bool(bound.decide(flat[None])[0])
        probability = float(np.mean(flat > 0.0))
    else:
        fault = bool(flat[0] > 0.0)
        probability = float(1.0 / (1.0 + np.exp(-flat[0])))
    return DetectResponse(
        checkpoint=request.checkpoint,
        family=model.spec.label,
        pmu_buses=buses,
        logits=flat.tolist(),
        probability=probability,
        detection=(Detection.FAULT if fault else Detection.NO_FAULT).value,
    )


# --- Admin Endpoints ---

@app.get("/health", response_model=StatusResponse, tags=["Admin"])
async def health():
    return StatusResponse(status="ok", message="Service is running", version=settings.APP_VERSION)


@app.get("/pmu-configs", response_model=PmuConfigsResponse, tags=["Admin"])
async def pmu_configs():
    try:
        return PmuConfigsResponse(configs=presets.pmu_configs())
    except FaultDetectionError as e:
        logger.error(f"Failed to load PMU configurations: {str(e)}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to load PMU configurations: {str(e)}")


if __name__ == "__main__":
    uvicorn.run("main:app", host="0.0.0.0", port=8000, reload=True)
