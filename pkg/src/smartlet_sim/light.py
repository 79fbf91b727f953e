"""Light sources and the hemispherical measurement dome.

The dome carries 16 azimuthal columns (22.5 degrees apart) of 21 LEDs each
spanning altitude 0..90 degrees, every LED calibrated to 50 uW/cm2 at the
center.  One sun is 100 mW/cm2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

ONE_SUN_W_CM2 = 0.1
DOME_LED_W_CM2 = 50e-6
DOME_AZIMUTH_STEPS = 16
DOME_ALTITUDE_STEPS = 21


class SourceKind(Enum):
    SUN = "sun"
    DOME_LED = "dome_led"
    PEER_LED = "peer_led"


@dataclass(frozen=True)
class LightSource:
    direction: tuple               # unit vector from the target toward the source
    irradiance_w_cm2: float
    kind: SourceKind = SourceKind.SUN

    def __post_init__(self):
        if self.irradiance_w_cm2 < 0:
            raise ValueError("irradiance must be >= 0")


@dataclass
class LightEnvironment:
    sources: list = field(default_factory=list)

    @classmethod
    def single_sun(cls, direction=(0.0, 0.0, 1.0),
                   irradiance_w_cm2=ONE_SUN_W_CM2) -> "LightEnvironment":
        return cls([LightSource(unit(direction), irradiance_w_cm2, SourceKind.SUN)])


def unit(v) -> tuple:
    n = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if n == 0:
        raise ValueError("zero vector has no direction")
    return (v[0] / n, v[1] / n, v[2] / n)


def dome_grid():
    """Yield (azimuth_deg, altitude_deg, direction) for every dome LED."""
    for ia in range(DOME_AZIMUTH_STEPS):
        az_deg = 360.0 * ia / DOME_AZIMUTH_STEPS
        az = math.radians(az_deg)
        for ja in range(DOME_ALTITUDE_STEPS):
            alt_deg = 90.0 * ja / (DOME_ALTITUDE_STEPS - 1)
            alt = math.radians(alt_deg)
            direction = (math.cos(az) * math.cos(alt),
                         math.sin(az) * math.cos(alt),
                         math.sin(alt))
            yield az_deg, alt_deg, direction


def dome_environment() -> LightEnvironment:
    sources = [LightSource(d, DOME_LED_W_CM2, SourceKind.DOME_LED)
               for _, _, d in dome_grid()]
    return LightEnvironment(sources)
