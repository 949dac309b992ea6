from pathlib import Path
from typing import Optional, Union

from dotenv import dotenv_values
from pydantic import ConfigDict
from pydantic_settings import BaseSettings

from src.schemas.turn import DetectorConfig


class Settings(BaseSettings):
    OUTPUT_DIR: str = "output"

    model_config = ConfigDict(
        extra="ignore", env_prefix="UTURN_", env_file=".env", env_file_encoding="utf-8"
    )  # noqa


config = Settings()


def load_detector_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[dict] = None
) -> DetectorConfig:
    """
    The load_detector_config function reads a flat ``key=value`` detector configuration file.

    Keys are DetectorConfig field names, values are in SI units (rad/s, rad, s, Hz).
    Entries of overrides that are not None win over the file.

    :param path: str | Path: Configuration file, optional
    :param overrides: dict: Values set on the command line
    :return: A validated DetectorConfig

    """
    values: dict = {}
    if path is not None:
        values.update({k.strip().lower(): v for k, v in dotenv_values(path).items() if v not in (None, "")})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return DetectorConfig(**values)


def dump_detector_config(detector: DetectorConfig) -> str:
    return "".join(f"{key}={value!r}\n" for key, value in detector.model_dump().items())
