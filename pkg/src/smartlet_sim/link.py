"""LED-to-photodetector optical channel.

The emitter radiates with a Lambertian cos^m profile; the receiver responds
with the cosine of its own incidence angle and inverse-square distance.  Two
photodiodes in series saturate around 1.2 V, so the transfer is a simple
half-saturation curve; the digital line is the threshold comparison.  The
intensity scale is calibrated so an aligned pair closes the digital link out
to 4 mm and loses it beyond roughly 5 mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class OpticalLinkParams:
    lambertian_order: float = 1.0
    # Irradiance in W/cm2 produced at 1 mm, on-axis; calibrated for 4 mm range.
    intensity_scale_w_cm2: float = 3.5e-3
    opd_saturation_v: float = 1.2
    opd_half_sat_w_cm2: float = 1e-4
    digital_threshold_v: float = 0.7
    bandwidth_hz: float = 2000.0
    contact_distance_mm: float = 0.1


def _dot(a, b) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _norm(v) -> float:
    return math.sqrt(_dot(v, v))


def link_irradiance(link: OpticalLinkParams, emitter_pos_m, emitter_normal,
                    receiver_pos_m, receiver_normal) -> float:
    """Irradiance (W/cm2) an emitting face delivers to a receiving face."""
    delta = (receiver_pos_m[0] - emitter_pos_m[0],
             receiver_pos_m[1] - emitter_pos_m[1],
             receiver_pos_m[2] - emitter_pos_m[2])
    d_mm = _norm(delta) * 1e3
    if d_mm < link.contact_distance_mm:
        d_mm = link.contact_distance_mm
        cos_e = 1.0
        cos_r = 1.0
    else:
        toward_receiver = (delta[0] / (d_mm * 1e-3), delta[1] / (d_mm * 1e-3),
                           delta[2] / (d_mm * 1e-3))
        cos_e = max(0.0, _dot(toward_receiver, emitter_normal))
        cos_r = max(0.0, -_dot(toward_receiver, receiver_normal))
    if cos_e == 0.0 or cos_r == 0.0:
        return 0.0
    return link.intensity_scale_w_cm2 * (cos_e ** link.lambertian_order) \
        * cos_r / (d_mm * d_mm)


def opd_voltage(link: OpticalLinkParams, irradiance_w_cm2: float) -> float:
    """Saturating photodetector transfer, monotone in irradiance."""
    e = max(0.0, irradiance_w_cm2)
    return link.opd_saturation_v * e / (e + link.opd_half_sat_w_cm2)


def opd_receive(link: OpticalLinkParams, emitter_pos_m, emitter_normal,
                emitter_on: bool, receiver_pos_m, receiver_normal):
    """Full channel evaluation -> (voltage, digital)."""
    if not emitter_on:
        return 0.0, False
    e = link_irradiance(link, emitter_pos_m, emitter_normal,
                        receiver_pos_m, receiver_normal)
    v = opd_voltage(link, e)
    return v, v >= link.digital_threshold_v


def lowpass_alpha(link: OpticalLinkParams, dt_s: float) -> float:
    """First-order response step factor for sampling at dt: the detector
    voltage moves this fraction of the way to its target per sample."""
    tau = 1.0 / (2.0 * math.pi * link.bandwidth_hz)
    return 1.0 - math.exp(-dt_s / tau)
