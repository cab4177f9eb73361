"""Application configuration settings."""
import os
from pathlib import Path
from dotenv import load_dotenv

# Project Root
PROJECT_ROOT_COMPUTED: Path = Path(__file__).resolve().parent.parent

# Load environment variables from project root .env explicitly
load_dotenv(PROJECT_ROOT_COMPUTED / ".env")

class Settings:
    """Application settings."""
    
    APP_VERSION: str = "1.0.0"
    
    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()
    
    # Storage locations
    DATA_DIR: Path = Path(os.getenv("DATA_DIR", "data"))
    RUNS_DIR: Path = Path(os.getenv("RUNS_DIR", "runs"))
    CHECKPOINT_DIR: Path = Path(os.getenv("CHECKPOINT_DIR", "runs/checkpoints"))
    
    # Reproducibility and parallelism
    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "0"))
    JOBS: int = int(os.getenv("JOBS", str(os.cpu_count() or 1)))
    
    # Check every op output for NaN/Inf (slow)
    DEBUG_FINITE: bool = os.getenv("DEBUG_FINITE", "false").lower() == "true"
    
    # Project Root
    PROJECT_ROOT: Path = PROJECT_ROOT_COMPUTED
    
    @property
    def config_dir(self) -> Path:
        """Directory holding the bundled JSON configs and topology."""
        return self.PROJECT_ROOT / "config"
    
    @property
    def topology_path(self) -> Path:
        """Bundled IEEE 123-node feeder description."""
        return self.config_dir / "ieee123.topo"
    
    @property
    def pmu_configs_path(self) -> Path:
        """Bundled PMU placement table."""
        return self.config_dir / "pmu_configs.json"

settings = Settings()
