from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    command: str
    config: dict = Field(default_factory=dict)
    input_digests: dict[str, str] = Field(default_factory=dict)
    seed: int = 0
    tool_version: str
    outputs: list[str] = Field(default_factory=list)
