import logging

from pydantic_settings import BaseSettings, SettingsConfigDict

ENV_FILES = (".env", ".env.local")

logger = logging.getLogger(__name__)


class MechanismConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=ENV_FILES,
        env_prefix="mechanism_",
        extra="ignore",
    )

    """
    Absolute tolerance used by every real-valued comparison.
    """
    tolerance: float = 1e-9

    brute_force_max_n: int = 8
    nsq_max_n: int = 10
    general_bounds_max_n: int = 6
    superadditive_max_n: int = 12
    assignment_max_n: int = 10_000
    path_flow_max_edges: int = 16


class SharingConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=ENV_FILES,
        env_prefix="sharing_",
        extra="ignore",
    )

    modulus: int = 2**61 - 1


class SimulationConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=ENV_FILES,
        env_prefix="sim_",
        extra="ignore",
    )

    round_cap: int = 1_000_000


class PuzzleConfig(BaseSettings):
    """
    Time-lock and time-line puzzle parameters.
    A kappa of 16 is the toy mode used for hand-checkable examples.
    """

    model_config = SettingsConfigDict(
        env_file=ENV_FILES,
        env_prefix="puzzle_",
        extra="ignore",
    )

    kappa: int = 512
    hash_name: str = "sha256"
    line_max_items: int = 10_000


class Config(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=ENV_FILES,
        extra="ignore",
    )

    app_name: str = "datashare"
    debug_mode: bool = False
    environment: str = "development"
    """
    Root seed; every random stream in a run is derived from it by name.
    """
    seed: int = 0

    mechanism: MechanismConfig = MechanismConfig()
    sharing: SharingConfig = SharingConfig()
    simulation: SimulationConfig = SimulationConfig()
    puzzle: PuzzleConfig = PuzzleConfig()

    sentry_dsn: str | None = None


config = Config()  # type: ignore
