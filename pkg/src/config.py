"""
Runtime configuration.

Values come from the environment (optionally via a .env file). They are
read at call time so tests and the CLI can override them per invocation.
"""

import os
import logging
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from src.errors import SchemaError

load_dotenv()
logger = logging.getLogger(__name__)

ENV_PREFIX = "SPECPRESHEAF_"


class Settings(BaseModel):
    """Size bounds and logging level."""

    max_contexts: int = Field(default=5000, ge=1, description="Largest poset closure or build may produce")
    max_automorphism_contexts: int = Field(
        default=200, ge=1, description="Largest poset the automorphism and witness searches accept"
    )
    max_full_abelian: int = Field(default=6, ge=1, description="Largest n for full_abelian_poset")
    log_level: str = Field(default="INFO")

    @property
    def automorphism_limit(self) -> int:
        """max_contexts caps every other bound."""
        return min(self.max_automorphism_contexts, self.max_contexts)


def get_settings() -> Settings:
    """Build settings from SPECPRESHEAF_* environment variables."""
    values = {}
    for name in Settings.model_fields:
        raw = os.getenv(ENV_PREFIX + name.upper())
        if raw is not None and raw.strip() != "":
            values[name] = raw.strip()

    try:
        return Settings(**values)
    except ValidationError as e:
        first = e.errors()[0]
        variable = ENV_PREFIX + str(first['loc'][0]).upper()
        raise SchemaError(f"Invalid value for {variable}: {first['msg']}", witness=variable) from e
