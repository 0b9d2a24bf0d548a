from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    environment: str = Field(default="dev")
    app_name: str = Field(default="qcat")
    log_level: str = Field(default="INFO")

    seed: int = Field(default=20110101)
    tolerance: float = Field(default=1e-9)
    cup_svd_tolerance: float = Field(default=1e-6)
    psd_floor: float = Field(default=-1e-9)
    amplitude_threshold: float = Field(default=1e-12)

    verify_max_nodes: int = Field(default=20)
    verify_max_boundary_dim: int = Field(default=4096)
    verify_trials: int = Field(default=25)
    verify_dims: str = Field(default="2,3,4,5")
    default_max_steps: int = Field(default=200)

    artifacts_dir: str = Field(default="artifacts")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="QCAT_",
        extra="ignore",
    )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


def parse_dims(raw: str) -> list[int]:
    dims: list[int] = []
    for chunk in raw.split(","):
        item = chunk.strip()
        if not item:
            continue
        try:
            value = int(item)
        except ValueError:
            continue
        if value >= 1:
            dims.append(value)
    return dims
