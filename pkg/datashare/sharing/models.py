from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, model_validator

from datashare.config import config


class FieldElement(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: Annotated[int, Field(ge=0)]
    modulus: Annotated[int, Field(ge=2)] = Field(
        default_factory=lambda: config.sharing.modulus
    )

    @model_validator(mode="after")
    def _reduced(self):
        if self.value >= self.modulus:
            raise ValueError(f"{self.value} is not reduced modulo {self.modulus}")
        return self


class Share(BaseModel):
    """Evaluation of the sharing polynomial at x = index."""

    model_config = ConfigDict(frozen=True)

    index: Annotated[int, Field(ge=1)]
    value: FieldElement


class ByteShare(BaseModel):
    """One party's share of a byte string: a share per limb, same index throughout."""

    model_config = ConfigDict(frozen=True)

    index: Annotated[int, Field(ge=1)]
    limbs: tuple[int, ...]
    length: Annotated[int, Field(ge=0)]
    modulus: Annotated[int, Field(ge=2)]

    def limb_share(self, position: int) -> Share:
        return Share(
            index=self.index,
            value=FieldElement(value=self.limbs[position], modulus=self.modulus),
        )
