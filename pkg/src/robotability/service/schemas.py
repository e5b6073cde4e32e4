"""Request models for the recompute service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class ProfileRequest(BaseModel):
    """A robot profile submitted for weight/zone recomputation."""

    name: str = "custom"
    included_features: list[str] = Field(min_length=2)
    polarity_overrides: dict[str, Literal[1, -1]] = Field(default_factory=dict)
    extractor_param_overrides: dict[str, dict] = Field(default_factory=dict)
    weight_source: Literal["auto", "matrix", "weights"] = "auto"
