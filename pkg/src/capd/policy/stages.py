"""Bandwidth stages: named Mbps intervals mapped to protection programs."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Iterable, Optional, Sequence, Tuple

# Telemetry is quantized to this grid; inclusive [low, high] stages tile it exactly.
RESOLUTION = Decimal("0.0001")
UNBOUNDED_SENTINEL = Decimal("100000.0")


class StageConfigError(ValueError):
    pass


def quantize(value) -> Decimal:
    d = value if isinstance(value, Decimal) else Decimal(repr(float(value)))
    return d.quantize(RESOLUTION, rounding=ROUND_HALF_EVEN)


@dataclass(frozen=True)
class Stage:
    name: str
    low: Decimal
    high: Decimal
    program: str

    @property
    def slug(self) -> str:
        return self.name.replace("-", "_").replace(" ", "_")

    def contains(self, value) -> bool:
        v = quantize(value)
        return self.low <= v <= self.high


@dataclass(frozen=True)
class BandwidthStageConfig:
    stages: Tuple[Stage, ...]

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        if not self.stages:
            raise StageConfigError("at least one stage is required")
        names = [s.name for s in self.stages]
        if len(set(names)) != len(names):
            raise StageConfigError("stage names must be unique")
        ordered = sorted(self.stages, key=lambda s: s.low)
        for s in ordered:
            if s.low < 0:
                raise StageConfigError(f"stage {s.name}: low bound must be >= 0")
            if s.low > s.high:
                raise StageConfigError(f"stage {s.name}: low {s.low} exceeds high {s.high}")
            if not s.program:
                raise StageConfigError(f"stage {s.name}: program code required")
        if ordered[0].low != 0:
            raise StageConfigError("stages must start at 0 Mbps")
        for a, b in zip(ordered, ordered[1:]):
            if b.low <= a.high:
                raise StageConfigError(f"overlapping stage ranges: {a.name} [{a.low}, {a.high}] "
                                       f"and {b.name} [{b.low}, {b.high}]")
            if b.low - a.high != RESOLUTION:
                raise StageConfigError(f"gap between stages {a.name} and {b.name}: next low must be "
                                       f"{a.high + RESOLUTION} on the {RESOLUTION} Mbps grid")

    @classmethod
    def from_rows(cls, rows: Iterable) -> "BandwidthStageConfig":
        stages = []
        for i, row in enumerate(rows):
            try:
                if isinstance(row, Stage):
                    stages.append(row)
                elif isinstance(row, dict):
                    stages.append(Stage(str(row["name"]), Decimal(str(row["low"])),
                                        Decimal(str(row["high"])), str(row["program"])))
                else:
                    name, low, high, program = row
                    stages.append(Stage(name, Decimal(str(low)), Decimal(str(high)), program))
            except (KeyError, ValueError, TypeError, ArithmeticError) as exc:
                raise StageConfigError(f"stages[{i}]: malformed stage ({exc})") from None
        return cls(tuple(stages))

    @classmethod
    def default(cls) -> "BandwidthStageConfig":
        return cls.from_rows([
            ("very-low", "0.0", "0.0999", "SEND_OBJECT_COUNT"),
            ("low", "0.1", "0.9999", "SEND_STILL_IMAGES"),
            ("medium", "1.0", "4.9999", "SEND_GRAYSCALE_VIDEO"),
            ("high", "5.0", str(UNBOUNDED_SENTINEL), "SEND_COLOR_VIDEO"),
        ])

    def matching(self, value) -> Sequence[Stage]:
        return [s for s in self.stages if s.contains(value)]

    def stage_for(self, value) -> Optional[Stage]:
        found = self.matching(value)
        return found[0] if found else None

    @property
    def programs(self) -> Tuple[str, ...]:
        return tuple(s.program for s in self.stages)

    def to_rows(self):
        return [{"name": s.name, "low": float(s.low), "high": float(s.high), "program": s.program}
                for s in self.stages]
