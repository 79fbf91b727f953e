"""Solar harvesting: single cells, the 8-tube series string, dome sweeps.

Efficiency follows the standard closed form

    PCE(%) = 100 * Pmax / (Pin * A) = 100 * FF * Isc * Voc / (Pin * A)

with Pin in W/cm2 and the footprint area A in cm2.  A rolled tube responds
identically from every direction perpendicular to its axis and keeps a small
end-cap floor for axial light; a planar cell follows the cosine of the
incidence angle.

The folded cube carries eight tubes on the four top and four bottom edges,
wired in series.  Calibration anchors (measured at 1 sun from above):
open-circuit voltage 2.1 V, short-circuit current 7 uA, output ~17 uW.  Under
oblique light more edges catch some illumination, which lifts the string
voltage up to the observed ceiling of 3.1 V; the string never reaches the
flat-layout sum of 5.2 V once folded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError
from .light import ONE_SUN_W_CM2, LightEnvironment, dome_grid, unit

STANDARD_PIN_W_CM2 = ONE_SUN_W_CM2

# Single rolled tube, measured at 1 sun.
TUBULAR_ISC_A = 50e-6
TUBULAR_VOC_V = 0.65
DEFAULT_FILL_FACTOR = 0.5
# Footprint solved from the closed form so a single tube shows 11.5 %.
TUBULAR_AREA_CM2 = 100 * DEFAULT_FILL_FACTOR * TUBULAR_ISC_A * TUBULAR_VOC_V \
    / (STANDARD_PIN_W_CM2 * 11.5)

# End-cap floor: a tube still harvests a little when lit along its axis.
TUBULAR_AXIAL_FLOOR = 0.1

# Folded-string calibration (top illumination, 1 sun).
STRING_ISC_A = 7e-6
STRING_VOC_TOP_V = 2.1
STRING_VOC_MAX_V = 3.1
STRING_POWER_W = 17e-6
STRING_FILL_FACTOR = STRING_POWER_W / (STRING_ISC_A * STRING_VOC_TOP_V)
# Four edges face straight-up light; each lit edge contributes one voltage slot.
STRING_VOLT_PER_LIT_V = STRING_VOC_TOP_V / 4
LIT_GAIN_THRESHOLD = 0.02
# Total footprint documented for the 1.5 % eight-tube figure.
STRING_AREA_CM2 = 1.133e-2


class CellKind(Enum):
    PLANAR = "planar"
    TUBULAR = "tubular"


@dataclass(frozen=True)
class SolarCellSpec:
    i_sc_a: float = TUBULAR_ISC_A
    v_oc_v: float = TUBULAR_VOC_V
    fill_factor: float = DEFAULT_FILL_FACTOR
    footprint_area_cm2: float = TUBULAR_AREA_CM2
    kind: CellKind = CellKind.TUBULAR
    tube_axis: tuple | None = (0.0, 1.0, 0.0)   # tubular only
    normal: tuple | None = None                  # planar only
    edge_outward: tuple | None = None            # cube shadowing direction

    def __post_init__(self):
        if not 0 < self.fill_factor < 1:
            raise DomainError("fill factor must be in (0, 1)")
        if self.i_sc_a <= 0 or self.v_oc_v <= 0 or self.footprint_area_cm2 <= 0:
            raise DomainError("Isc, Voc and area must be positive")


def pce(p_max_w: float, p_in_w_cm2: float, area_cm2: float) -> float:
    """Power conversion efficiency in percent."""
    if p_in_w_cm2 <= 0 or area_cm2 <= 0:
        raise DomainError("incident power density and area must be positive")
    return 100.0 * p_max_w / (p_in_w_cm2 * area_cm2)


def _dot(a, b) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def angular_factor(cell: SolarCellSpec, incidence) -> float:
    """Relative response to light arriving from the given unit direction.

    Tubular cells depend only on the angle to the tube axis, so the factor is
    exactly invariant under rotation about the axis.
    """
    if cell.kind is CellKind.PLANAR:
        normal = cell.normal or (0.0, 0.0, 1.0)
        return max(0.0, _dot(incidence, normal))
    axis = cell.tube_axis or (0.0, 1.0, 0.0)
    c = _dot(incidence, axis)
    s = math.sqrt(max(0.0, 1.0 - c * c))
    return max(TUBULAR_AXIAL_FLOOR, s)


def edge_visibility(cell: SolarCellSpec, incidence) -> float:
    """Cube-body shadowing of an edge-mounted tube.

    A tube on a cube edge sees roughly half the sky; light from beyond its
    two adjacent faces is occluded.  The transition is soft because the tube
    protrudes at the edge: at grazing incidence half the roll is still lit.
    """
    if cell.edge_outward is None:
        return 1.0
    return min(1.0, max(0.0, 0.5 + _dot(incidence, cell.edge_outward)))


def cell_gain(cell: SolarCellSpec, incidence) -> float:
    return edge_visibility(cell, incidence) * angular_factor(cell, incidence)


@dataclass(frozen=True)
class SeriesString:
    cells: tuple
    bypass_diodes: bool = False
    folded: bool = False     # True once rolled onto the cube edges

    def __post_init__(self):
        if len(self.cells) != 8:
            raise DomainError("a series string carries eight cells")


_SQ2 = 1.0 / math.sqrt(2.0)


def cube_edge_string() -> SeriesString:
    """Eight tubes on the top and bottom cube edges, in series."""
    cells = []
    for sz in (1.0, -1.0):
        for outward, axis in (((_SQ2, 0.0, _SQ2 * sz), (0.0, 1.0, 0.0)),
                              ((-_SQ2, 0.0, _SQ2 * sz), (0.0, 1.0, 0.0)),
                              ((0.0, _SQ2, _SQ2 * sz), (1.0, 0.0, 0.0)),
                              ((0.0, -_SQ2, _SQ2 * sz), (1.0, 0.0, 0.0))):
            cells.append(SolarCellSpec(kind=CellKind.TUBULAR, tube_axis=axis,
                                       edge_outward=outward))
    return SeriesString(tuple(cells), folded=True)


def planar_string() -> SeriesString:
    """The same eight cells before folding: coplanar, facing +z."""
    cells = tuple(SolarCellSpec(kind=CellKind.PLANAR, tube_axis=None,
                                normal=(0.0, 0.0, 1.0)) for _ in range(8))
    return SeriesString(cells)


def string_power(string: SeriesString, env: LightEnvironment):
    """Series operating point -> (power_w, v_out_v, i_out_a).

    Without bypass diodes the worst illuminated cell limits the current;
    voltage accrues only over illuminated cells.  For the folded cube the
    per-lit-edge voltage and the string fill factor are calibrated to the
    top-illumination anchors.
    """
    best_gain = [0.0] * len(string.cells)
    exposure = [0.0] * len(string.cells)   # gain weighted by relative irradiance
    for source in env.sources:
        e_rel = source.irradiance_w_cm2 / ONE_SUN_W_CM2
        if e_rel <= 0:
            continue
        for i, cell in enumerate(string.cells):
            g = cell_gain(cell, source.direction)
            exposure[i] += g * e_rel
            if g > best_gain[i]:
                best_gain[i] = g
    lit = [i for i in range(len(string.cells)) if best_gain[i] > LIT_GAIN_THRESHOLD]
    if not lit:
        return 0.0, 0.0, 0.0
    if string.folded:
        v_out = min(STRING_VOC_MAX_V, STRING_VOLT_PER_LIT_V * len(lit))
        i_out = STRING_ISC_A * min(exposure[i] for i in lit)
        power = STRING_FILL_FACTOR * i_out * v_out
    else:
        v_out = sum(string.cells[i].v_oc_v for i in lit)
        i_out = min(string.cells[i].i_sc_a * exposure[i] for i in lit)
        ff = string.cells[0].fill_factor
        power = ff * i_out * v_out
    return power, v_out, i_out


def harvest_power(string: SeriesString, direction, irradiance_w_cm2: float) -> float:
    """Pooled maximum-power-point harvest from one direction, as recorded by
    the dome instrument.  Relative units; proportional to irradiance."""
    d = unit(direction)
    e_rel = irradiance_w_cm2 / ONE_SUN_W_CM2
    return e_rel * sum(cell_gain(cell, d) for cell in string.cells)


def dome_sweep(mode: str, string: SeriesString | None = None, leds=None):
    """Relative PCE over the dome grid, one LED lit at a time.

    mode is 'folded' or 'prefolded'; returns a list of
    (azimuth_deg, altitude_deg, relative_pce) normalized to the grid maximum.
    leds optionally restricts which (azimuth_deg, altitude_deg) positions are
    powered; the rest of the grid reads zero.
    """
    if mode == "folded":
        string = string or cube_edge_string()
    elif mode == "prefolded":
        string = string or planar_string()
    else:
        raise DomainError(f"unknown dome mode {mode!r}")
    lit = None if leds is None else {(az, alt) for az, alt in leds}
    raw = []
    for az, alt, d in dome_grid():
        if lit is not None and (az, alt) not in lit:
            raw.append((az, alt, 0.0))
        else:
            raw.append((az, alt, harvest_power(string, d, ONE_SUN_W_CM2)))
    peak = max(p for _, _, p in raw)
    if peak <= 0:
        return [(az, alt, 0.0) for az, alt, _ in raw]
    return [(az, alt, p / peak) for az, alt, p in raw]


def string_voltage_over_dome(string: SeriesString | None = None):
    """Folded-string open-circuit voltage for every dome LED direction."""
    string = string or cube_edge_string()
    volts = []
    for az, alt, d in dome_grid():
        env = LightEnvironment.single_sun(d)
        _, v, _ = string_power(string, env)
        volts.append((az, alt, v))
    return volts
