"""Electrolysis, buoyancy and motion of a cube in the tank.

Gas accumulates inside the cube from water splitting at the two electrode
pairs (Faraday's law, H2 at one electrode, O2 at the other, ideal-gas molar
volume at 25 C) and dissolves back with first-order kinetics - faster at the
air-water interface, where the methylene-blue bath attacks the bubbles.  The
cube sinks by a fixed excess weight and floats once the gas passes the
critical volume.  Motion is overdamped: at millimeter scale and mm/s speeds
inertia is irrelevant, so velocity is force over drag with a terminal cap.

A floating cube is pinned to the interface by its meniscus; it only detaches
downward once its weight deficit exceeds the meniscus pull-off force.  That
hysteresis is what makes programmed dive cycles crisp: gas dissolves at the
surface while the cube stays put, then it drops with a decisive deficit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError

FARADAY_C_PER_MOL = 96485.0
MOLAR_VOLUME_M3 = 2.445e-2     # ideal gas at 25 C
GRAVITY_M_S2 = 9.81

# Default body: excess weight 2.0e-7 N, critical gas volume ~20.4 nL.
DEFAULT_EDGE_M = 1e-3
DEFAULT_SOLID_VOLUME_M3 = 7.0e-11
DEFAULT_DRY_MASS_KG = DEFAULT_SOLID_VOLUME_M3 * 1000.0 + 2.0e-7 / GRAVITY_M_S2

TERMINAL_SPEED_M_S = 0.02


@dataclass(frozen=True)
class WaterParams:
    density_kg_m3: float = 1000.0
    dissolution_rate_bulk: float = 0.005      # 1/s
    dissolution_rate_surface: float = 0.02    # 1/s, methylene-blue assisted
    drag_n_s_per_m: float = 2e-5
    capillary_length_m: float = 2.7e-3
    capillary_force_n: float = 1e-6
    surface_bond_force_n: float = 2e-7        # per matching cell pair
    interface_detach_force_n: float = 1.6e-8  # meniscus pull-off
    brownian_speed_m_s: float = 2e-4          # lateral kick scale in transit

    def __post_init__(self):
        for name in ("density_kg_m3", "dissolution_rate_bulk",
                     "dissolution_rate_surface", "drag_n_s_per_m",
                     "capillary_length_m", "capillary_force_n",
                     "surface_bond_force_n"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.dissolution_rate_surface <= self.dissolution_rate_bulk:
            raise DomainError("surface dissolution must exceed bulk dissolution")


@dataclass(frozen=True)
class BgeState:
    enabled: bool = False
    current_a: float = 0.0
    faraday_efficiency: float = 1.0


@dataclass(frozen=True)
class SmartletBody:
    position_m: tuple = (0.0, 0.0, DEFAULT_EDGE_M / 2)
    velocity_m_s: tuple = (0.0, 0.0, 0.0)
    edge_length_m: float = DEFAULT_EDGE_M
    dry_mass_kg: float = DEFAULT_DRY_MASS_KG
    solid_volume_m3: float = DEFAULT_SOLID_VOLUME_M3
    gas_volume_m3: float = 0.0
    at_surface: bool = False
    on_floor: bool = True

    def __post_init__(self):
        if self.gas_volume_m3 < 0:
            raise DomainError("gas volume must be >= 0")


def gas_rate(current_a: float, faraday_efficiency: float = 1.0) -> float:
    """Gas production in m3/s: H2 at I/2F plus O2 at I/4F, times molar volume."""
    if current_a < 0:
        raise DomainError("electrolysis current must be >= 0")
    return 3.0 * current_a * MOLAR_VOLUME_M3 * faraday_efficiency \
        / (4.0 * FARADAY_C_PER_MOL)


def critical_gas_volume(body: SmartletBody, water: WaterParams) -> float:
    """Gas volume at which buoyancy exactly balances the excess weight."""
    return body.dry_mass_kg / water.density_kg_m3 - body.solid_volume_m3


def excess_weight(body: SmartletBody, water: WaterParams) -> float:
    return GRAVITY_M_S2 * (body.dry_mass_kg
                           - water.density_kg_m3 * body.solid_volume_m3)


def buoyancy_force(body: SmartletBody, water: WaterParams) -> float:
    """Net vertical force in N, positive upward.

    Written as rho*g*(V_gas - V_crit), which is algebraically identical to
    rho*g*(V_solid + V_gas) - g*m but makes the sign change at the critical
    volume exact in floating point.
    """
    v_crit = critical_gas_volume(body, water)
    return water.density_kg_m3 * GRAVITY_M_S2 * (body.gas_volume_m3 - v_crit)


def gas_step(volume_m3: float, rate_m3_s: float, k_per_s: float,
             dt_s: float) -> float:
    """Exact propagator of dV/dt = rate - k*V over one step."""
    if k_per_s <= 0:
        return volume_m3 + rate_m3_s * dt_s
    steady = rate_m3_s / k_per_s
    return steady + (volume_m3 - steady) * math.exp(-k_per_s * dt_s)


def capillary_force(distance_m: float, water: WaterParams,
                    contact_distance_m: float = DEFAULT_EDGE_M) -> float:
    """Lateral meniscus attraction between two floating cubes (magnitude)."""
    gap = max(0.0, distance_m - contact_distance_m)
    return water.capillary_force_n * math.exp(-gap / water.capillary_length_m)


def step_motion(body: SmartletBody, force_n, dt_s: float, water: WaterParams,
                bge_current_a: float = 0.0, rng=None,
                floor_z_m: float | None = None,
                surface_z_m: float | None = None,
                bounds_m=None, held_at_surface: bool = False) -> SmartletBody:
    """One overdamped kinematics step plus the gas bookkeeping.

    force_n is the (fx, fy, fz) external force; buoyancy must already be
    included by the caller.  floor_z_m / surface_z_m are the z coordinates of
    the tank floor and the water surface.  held_at_surface pins the body to
    the interface (bond or meniscus) regardless of the net force.
    """
    if dt_s <= 0:
        raise DomainError("dt must be positive")
    half = body.edge_length_m / 2
    c = water.drag_n_s_per_m
    vx, vy, vz = force_n[0] / c, force_n[1] / c, force_n[2] / c

    in_transit = not body.on_floor and not body.at_surface
    if rng is not None and in_transit:
        vx += water.brownian_speed_m_s * rng.gauss()
        vy += water.brownian_speed_m_s * rng.gauss()

    speed = math.sqrt(vx * vx + vy * vy + vz * vz)
    if speed > TERMINAL_SPEED_M_S:
        scale = TERMINAL_SPEED_M_S / speed
        vx, vy, vz = vx * scale, vy * scale, vz * scale

    x = body.position_m[0] + vx * dt_s
    y = body.position_m[1] + vy * dt_s
    z = body.position_m[2] + vz * dt_s

    at_surface = body.at_surface
    on_floor = body.on_floor

    if held_at_surface and surface_z_m is not None:
        z = surface_z_m - half
        at_surface = True
        on_floor = False
    else:
        if surface_z_m is not None:
            surface_center = surface_z_m - half
            if z >= surface_center:
                if vz > 0 or at_surface:
                    z = surface_center
                    at_surface = True
                    on_floor = False
            if at_surface and vz < 0:
                at_surface = False
        if floor_z_m is not None:
            floor_center = floor_z_m + half
            if z <= floor_center:
                z = floor_center
                on_floor = True
                at_surface = False
            elif vz > 0:
                on_floor = False

    if bounds_m is not None:
        x = min(max(x, bounds_m[0][0] + half), bounds_m[0][1] - half)
        y = min(max(y, bounds_m[1][0] + half), bounds_m[1][1] - half)

    k = water.dissolution_rate_surface if at_surface else water.dissolution_rate_bulk
    gas = gas_step(body.gas_volume_m3, gas_rate(bge_current_a), k, dt_s)
    if gas < 0:
        gas = 0.0

    return replace(body, position_m=(x, y, z), velocity_m_s=(vx, vy, vz),
                   gas_volume_m3=gas, at_surface=at_surface, on_floor=on_floor)
