from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RunConfig(BaseModel):
    """
    Validated options of one CLI invocation

    Numeric options are checked here before any computation starts; the
    whole model is echoed into every output header.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    subcommand: str
    input: Optional[str] = None
    output: Optional[str] = None
    format: Literal["csv", "json"] = "json"
    seed: int = 0
    threads: int = Field(default=1, ge=1)
    D: List[float] = Field(default_factory=list)
    eps: Optional[Union[float, Literal["auto"]]] = None
    radii: List[float] = Field(default_factory=list)
    resolution: float = Field(default=1e-3, gt=0, le=0.1)
    z_max: Optional[float] = Field(default=None, gt=0)
    k_max: Optional[float] = Field(default=None, gt=0)
    k_points: Optional[int] = Field(default=None, ge=2)
    base_grid: Optional[int] = Field(default=None, ge=1)
    max_levels: Optional[int] = Field(default=None, ge=1, le=12)
    sizes: List[int] = Field(default_factory=list)

    @field_validator("D", "radii")
    @classmethod
    def _positive(cls, values: List[float]) -> List[float]:
        if any(not v > 0 for v in values):
            raise ValueError("radii must be positive")
        return values

    @field_validator("eps")
    @classmethod
    def _eps(cls, value):
        if isinstance(value, float) and not value > 0:
            raise ValueError("eps must be positive")
        return value

    @field_validator("sizes")
    @classmethod
    def _sizes(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise ValueError("sizes must be positive")
        return values

    @model_validator(mode="after")
    def _ordered_radii(self) -> "RunConfig":
        if self.subcommand == "entropy" and self.radii and sorted(self.radii) != self.radii:
            raise ValueError("entropy radii must be increasing")
        return self

    def echo(self) -> str:
        return self.model_dump_json(exclude_none=True)
