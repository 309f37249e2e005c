"""
Configuration management for veriprop.

Settings come from (highest first) explicit overrides passed by the CLI, a
dotenv file given with ``--config``, ``VERIPROP_*`` environment variables and
the defaults below. Nested sections use ``__`` as the delimiter, e.g.
``VERIPROP_ALIGNMENT__TAU_MATCH=0.6``.

Example:
    from backend.config import get_settings

    settings = get_settings()
    print(f"Running in {settings.environment} mode")
    print(f"KB directory: {settings.kb_dir}")
"""
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

BUNDLED_KB_DIR = Path(__file__).resolve().parent / "app" / "kb" / "data"
ATTRIBUTE_KINDS = (
    "diagnosis",
    "medication",
    "dosage",
    "lab_value",
    "procedure",
    "treatment",
    "status",
    "event",
)


class Environment(str, Enum):
    """Application environment types."""
    DEVELOPMENT = "development"
    TESTING = "testing"
    PRODUCTION = "production"


class LogLevel(str, Enum):
    """Logging levels."""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class ExtractionSettings(BaseModel):
    """
    Rule-based extraction configuration.

    Attributes:
        negation_window: Tokens inspected before a mention for a negation cue
        post_negation_window: Auxiliaries allowed between a mention and a
            post-entity cue
        default_pair_unit: Unit given to bare pairs such as "120/80"
    """

    negation_window: int = Field(
        default=5,
        ge=0,
        le=20,
        description="Tokens inspected before a mention for a negation cue"
    )
    post_negation_window: int = Field(
        default=3,
        ge=0,
        le=10,
        description="Auxiliaries allowed before a post-entity negation cue"
    )
    default_pair_unit: str = Field(
        default="mmHg",
        description="Unit assumed for bare systolic/diastolic pairs"
    )


class AlignmentSettings(BaseModel):
    """
    Embedding and matching configuration.

    Attributes:
        embedder: Embedding provider name
        dimension: Hashed vector dimension
        hash_seed: Key for the feature hash
        tau_match: Minimum cosine similarity for a match
        embeddings_file: JSON-lines file for the precomputed provider
    """

    embedder: Literal["hashed", "precomputed"] = Field(
        default="hashed",
        description="Embedding provider"
    )
    dimension: int = Field(
        default=4096,
        ge=16,
        le=1 << 20,
        description="Hashed embedding dimension"
    )
    hash_seed: str = Field(
        default="veriprop-v1",
        min_length=1,
        description="Feature hash key"
    )
    tau_match: float = Field(
        default=0.5,
        ge=0.0,
        le=1.0,
        description="Match threshold on cosine similarity"
    )
    embeddings_file: Optional[str] = Field(
        default=None,
        description="Precomputed embeddings (JSON lines)"
    )


class CheckSettings(BaseModel):
    """
    Consistency check configuration.

    Attributes:
        tau_num: Relative tolerance for numeric equality
        key_attributes: Attribute kinds the presence check treats as key facts
        confidence_floor: Lower clip for verdict confidence
        confidence_ceiling: Upper clip for verdict confidence
    """

    tau_num: float = Field(
        default=1e-9,
        ge=0.0,
        description="Relative numeric tolerance"
    )
    key_attributes: List[str] = Field(
        default=["diagnosis", "treatment", "procedure", "medication"],
        description="Attribute kinds checked for omissions"
    )
    confidence_floor: float = Field(
        default=0.01,
        ge=0.0,
        le=1.0,
        description="Lower confidence clip"
    )
    confidence_ceiling: float = Field(
        default=0.99,
        ge=0.0,
        le=1.0,
        description="Upper confidence clip"
    )

    @field_validator('key_attributes')
    @classmethod
    def validate_key_attributes(cls, v):
        """Only known attribute kinds may be key facts."""
        known = set(ATTRIBUTE_KINDS)
        unknown = [name for name in v if name not in known]
        if unknown:
            raise ValueError(f"Unknown attribute kinds: {', '.join(unknown)}")
        return v

    @model_validator(mode='after')
    def validate_confidence_bounds(self):
        if self.confidence_floor >= self.confidence_ceiling:
            raise ValueError("confidence_floor must be below confidence_ceiling")
        return self


class CorpusSettings(BaseModel):
    """
    Synthetic corpus generation configuration.

    Attributes:
        min_propositions: Fewest EHR facts per patient
        max_propositions: Most EHR facts per patient
        summary_keep_rate: Share of non-key facts a faithful summary keeps
        workers: Parallel document workers
    """

    min_propositions: int = Field(
        default=10,
        ge=1,
        le=500,
        description="Fewest EHR propositions per patient"
    )
    max_propositions: int = Field(
        default=40,
        ge=1,
        le=500,
        description="Most EHR propositions per patient"
    )
    summary_keep_rate: float = Field(
        default=0.7,
        ge=0.0,
        le=1.0,
        description="Share of non-key facts kept in faithful summaries"
    )
    workers: int = Field(
        default=4,
        ge=1,
        le=64,
        description="Parallel document workers"
    )

    @model_validator(mode='after')
    def validate_size_range(self):
        if self.min_propositions > self.max_propositions:
            raise ValueError("min_propositions must not exceed max_propositions")
        return self


class LoraSettings(BaseModel):
    """
    Low-rank adapter training configuration.

    Attributes:
        learning_rate: AdamW step size
        weight_decay: Decoupled weight decay
        beta1: First moment decay
        beta2: Second moment decay
        eps: Denominator epsilon
        steps: Training steps
        batch_size: Examples per step
        init: Adapter initialization scheme
        init_std: Standard deviation of Gaussian initialization
        seed: Random seed
    """

    learning_rate: float = Field(
        default=1e-4, gt=0.0, description="AdamW learning rate"
    )
    weight_decay: float = Field(
        default=0.01, ge=0.0, description="Decoupled weight decay"
    )
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0, description="First moment decay")
    beta2: float = Field(
        default=0.999, ge=0.0, lt=1.0, description="Second moment decay"
    )
    eps: float = Field(default=1e-8, gt=0.0, description="AdamW epsilon")
    steps: int = Field(default=200, ge=1, le=100000, description="Training steps")
    batch_size: int = Field(default=8, ge=1, le=4096, description="Examples per step")
    init: Literal["zero", "gauss"] = Field(
        default="zero", description="Adapter initialization"
    )
    init_std: float = Field(
        default=0.1, gt=0.0, description="Gaussian init standard deviation"
    )
    seed: int = Field(default=0, ge=0, description="Random seed")


class LoggingSettings(BaseModel):
    """
    Logging configuration.

    Attributes:
        level: Logging level
        file_path: Optional log file path
        json_format: Whether to use JSON formatting
        console_output: Whether to log to stderr
    """

    level: LogLevel = Field(
        default=LogLevel.INFO,
        description="Logging level"
    )
    file_path: Optional[str] = Field(
        default=None,
        description="Log file path"
    )
    json_format: bool = Field(
        default=False,
        description="Whether to use JSON log formatting"
    )
    console_output: bool = Field(
        default=True,
        description="Whether to output logs to stderr"
    )


class Settings(BaseSettings):
    """
    Main veriprop settings.

    Attributes:
        app_name: Application name
        version: Application version
        environment: Current environment (development/testing/production)
        debug: Debug mode flag
        kb: Knowledge-base directory (bundled data when unset)
        extraction: Extraction configuration
        alignment: Alignment configuration
        checks: Check configuration
        corpus: Corpus generation configuration
        lora: Adapter training configuration
        logging: Logging configuration

    Example:
        settings = Settings()
        print(f"tau_match = {settings.alignment.tau_match}")
    """

    app_name: str = Field(
        default="veriprop",
        description="Application name"
    )
    version: str = Field(
        default="1.0.0",
        description="Application version"
    )

    environment: Environment = Field(
        default=Environment.DEVELOPMENT,
        description="Current application environment"
    )
    debug: bool = Field(
        default=False,
        description="Enable debug mode"
    )

    kb: Optional[str] = Field(
        default=None,
        description="Knowledge-base directory"
    )
    extraction: ExtractionSettings = Field(
        default_factory=ExtractionSettings,
        description="Extraction configuration"
    )
    alignment: AlignmentSettings = Field(
        default_factory=AlignmentSettings,
        description="Alignment configuration"
    )
    checks: CheckSettings = Field(
        default_factory=CheckSettings,
        description="Check configuration"
    )
    corpus: CorpusSettings = Field(
        default_factory=CorpusSettings,
        description="Corpus generation configuration"
    )
    lora: LoraSettings = Field(
        default_factory=LoraSettings,
        description="Adapter training configuration"
    )
    logging: LoggingSettings = Field(
        default_factory=LoggingSettings,
        description="Logging configuration"
    )

    model_config = SettingsConfigDict(
        env_prefix="VERIPROP_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ):
        # A --config file outranks the process environment.
        return init_settings, dotenv_settings, env_settings, file_secret_settings

    @field_validator('debug')
    @classmethod
    def validate_debug_in_production(cls, v, info):
        """Ensure debug is disabled in production."""
        environment = info.data.get('environment')
        if environment == Environment.PRODUCTION and v:
            raise ValueError("Debug mode must be disabled in production")
        return v

    @field_validator('logging')
    @classmethod
    def configure_logging_for_environment(cls, v, info):
        """Configure logging based on environment."""
        environment = info.data.get('environment')
        debug = info.data.get('debug', False)

        if environment == Environment.DEVELOPMENT:
            if debug:
                v.level = LogLevel.DEBUG
        elif environment == Environment.TESTING:
            v.level = LogLevel.WARNING
            v.console_output = False
        elif environment == Environment.PRODUCTION:
            v.level = LogLevel.INFO
            v.json_format = True
            v.console_output = True

        return v

    @property
    def is_development(self) -> bool:
        return self.environment == Environment.DEVELOPMENT

    @property
    def is_testing(self) -> bool:
        return self.environment == Environment.TESTING

    @property
    def is_production(self) -> bool:
        return self.environment == Environment.PRODUCTION

    @property
    def kb_dir(self) -> Path:
        """Configured KB directory, or the bundled one."""
        return Path(self.kb) if self.kb else BUNDLED_KB_DIR

    def effective_params(self) -> Dict[str, Any]:
        """Thresholds echoed into every verdict report."""
        return {
            "tau_match": self.alignment.tau_match,
            "tau_num": self.checks.tau_num,
            "embedder": self.alignment.embedder,
            "dimension": self.alignment.dimension,
            "hash_seed": self.alignment.hash_seed,
            "key_attributes": list(self.checks.key_attributes),
        }

    def validate_run_readiness(self) -> List[str]:
        """
        Validate the configuration before running a command.

        Returns:
            List of configuration issues (empty if valid)
        """
        issues = []

        if not self.kb_dir.is_dir():
            issues.append(f"Knowledge-base directory not found: {self.kb_dir}")

        if (
            self.alignment.embedder == "precomputed"
            and not self.alignment.embeddings_file
        ):
            issues.append("Precomputed embedder requires alignment.embeddings_file")

        if self.is_production and self.debug:
            issues.append("Debug mode should be disabled in production")

        return issues


def get_environment() -> Environment:
    """
    Detect current environment from the ENVIRONMENT variable.

    Returns:
        Current environment
    """
    env_str = os.getenv("ENVIRONMENT", "development").lower()

    try:
        return Environment(env_str)
    except ValueError:
        return Environment.DEVELOPMENT


def get_env_file_path(environment: Environment) -> str:
    """
    Get environment-specific .env file path.

    Args:
        environment: Target environment

    Returns:
        Path to environment-specific .env file
    """
    base_path = Path(__file__).parent.parent

    env_files = {
        Environment.DEVELOPMENT: base_path / ".env.development",
        Environment.TESTING: base_path / ".env.testing",
        Environment.PRODUCTION: base_path / ".env.production"
    }

    env_file = env_files.get(environment, base_path / ".env")

    # Fallback to generic .env if environment-specific file doesn't exist
    if not env_file.exists():
        fallback = base_path / ".env"
        if fallback.exists():
            return str(fallback)

    return str(env_file)


def create_settings(
    environment: Optional[Environment] = None,
    env_file: Optional[str] = None,
    **overrides: Any,
) -> Settings:
    """
    Create settings instance for specific environment.

    Args:
        environment: Target environment (auto-detected if None)
        env_file: Dotenv file to read instead of the environment default
        **overrides: Values that win over every other source

    Returns:
        Configured settings instance

    Raises:
        ValueError: production configuration has readiness issues
    """
    if environment is None:
        environment = get_environment()

    if env_file is None:
        env_file = get_env_file_path(environment)

    settings = Settings(
        environment=environment,
        _env_file=env_file,
        **overrides,
    )

    if environment == Environment.PRODUCTION:
        issues = settings.validate_run_readiness()
        if issues:
            raise ValueError(f"Production configuration issues: {'; '.join(issues)}")

    return settings


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get global settings instance (singleton pattern).

    Returns:
        Global settings instance
    """
    global _settings

    if _settings is None:
        _settings = create_settings()

    return _settings


def reload_settings() -> Settings:
    """
    Reload settings from environment (useful for testing).

    Returns:
        Newly loaded settings instance
    """
    global _settings
    _settings = None
    return get_settings()
