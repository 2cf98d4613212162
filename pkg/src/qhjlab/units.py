"""Physical units. Natural units hbar = m = 1 by default; every entry point
accepts an override."""

from dataclasses import dataclass


@dataclass(frozen=True)
class UnitsConfig:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")


NATURAL = UnitsConfig()
