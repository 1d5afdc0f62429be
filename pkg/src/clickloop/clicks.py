"""Click records exchanged between the session loop, segmenters, and the service."""

from dataclasses import dataclass
from typing import Literal

from .exceptions import InputError

Polarity = Literal["positive", "negative"]
Source = Literal["human", "pseudo"]

POSITIVE: Polarity = "positive"
NEGATIVE: Polarity = "negative"
HUMAN: Source = "human"
PSEUDO: Source = "pseudo"


@dataclass(frozen=True)
class Click:
    row: int
    col: int
    polarity: Polarity
    source: Source
    index: int = 0  # interaction round that issued the click

    def __post_init__(self):
        if self.polarity not in (POSITIVE, NEGATIVE):
            raise InputError(f"polarity must be positive or negative, got {self.polarity!r}")
        if self.source not in (HUMAN, PSEUDO):
            raise InputError(f"source must be human or pseudo, got {self.source!r}")

    def to_dict(self) -> dict:
        return {
            "row": self.row,
            "col": self.col,
            "polarity": self.polarity,
            "source": self.source,
            "index": self.index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Click":
        return cls(
            row=int(d["row"]),
            col=int(d["col"]),
            polarity=d["polarity"],
            source=d["source"],
            index=int(d.get("index", 0)),
        )
