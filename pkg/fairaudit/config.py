import os
from functools import lru_cache


class Settings:
    """
    Application settings and configuration.
    """

    def __init__(self):
        try:
            # Randomness
            self.SEED: int = int(os.environ.get("FAIRAUDIT_SEED", "0"))

            # Inference
            self.ALPHA: float = float(os.environ.get("FAIRAUDIT_ALPHA", "0.05"))
            self.BOOTSTRAP_REPLICATES: int = int(os.environ.get("FAIRAUDIT_BOOTSTRAP_REPLICATES", "2000"))
            self.CONSISTENCY_K: int = int(os.environ.get("FAIRAUDIT_CONSISTENCY_K", "5"))

            # Runtime
            self.LOG_LEVEL: str = os.environ.get("FAIRAUDIT_LOG_LEVEL", "INFO").upper()
            self.MAX_WORKERS: int = int(os.environ.get("FAIRAUDIT_MAX_WORKERS", "1"))
            self.MAX_FOREST_PLOTS: int = int(os.environ.get("FAIRAUDIT_MAX_FOREST_PLOTS", "20"))

            # Where each default came from, recorded in report metadata
            self.ALPHA_SOURCE: str = "environment" if "FAIRAUDIT_ALPHA" in os.environ else "default"
            self.SEED_SOURCE: str = "environment" if "FAIRAUDIT_SEED" in os.environ else "default"

            if not 0.0 < self.ALPHA < 1.0:
                raise ValueError(f"FAIRAUDIT_ALPHA must lie in (0, 1), got {self.ALPHA}")
            if self.BOOTSTRAP_REPLICATES < 100:
                raise ValueError("FAIRAUDIT_BOOTSTRAP_REPLICATES must be at least 100")
            if self.CONSISTENCY_K < 1:
                raise ValueError("FAIRAUDIT_CONSISTENCY_K must be at least 1")
            if self.MAX_WORKERS < 1:
                raise ValueError("FAIRAUDIT_MAX_WORKERS must be at least 1")
        except Exception as e:
            raise RuntimeError(f"Failed to initialize settings: {str(e)}")


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached application settings instance.

    Returns:
        Settings instance
    """
    return Settings()
