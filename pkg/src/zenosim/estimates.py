"""Order-of-magnitude kinematics for an ion crossing a membrane channel.

Two numbers matter: how the Heisenberg velocity spread imposed by a
nanometer-scale channel compares with the ion's thermal speed, and how
far the wave packet has spread sideways by the time the ion reaches its
trigger site tens of nanometers away. For a calcium ion at body
temperature the thermal speed wins by a factor of a few hundred, yet the
accumulated spread at the trigger is comparable to the ion's own size,
which is what makes the trigger a genuinely quantum branch point.

Conventions are order-of-magnitude choices, not unique: the velocity
spread uses delta_p * delta_x = hbar (no factor 1/2) and the thermal
speed is the 3D rms value sqrt(3kT/m). Both strings are recorded in
every report so the numbers stay interpretable next to variants that
pick hbar/2 or a 1D projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

HBAR = 1.054571817e-34       # J s
BOLTZMANN = 1.380649e-23     # J / K
ATOMIC_MASS_KG = 1.66053907e-27

CALCIUM_MASS_AMU = 40.078
BODY_TEMPERATURE_K = 310.0

UNCERTAINTY_CONVENTION = "delta_p * delta_x = hbar"
THERMAL_CONVENTION = "v_thermal = sqrt(3 k T / m)"


@dataclass(frozen=True)
class IonParameters:
    """Inputs for the channel-to-trigger estimate, all SI.

    mass: kg
    temperature: K
    confinement_width: m, the channel diameter doing the confining
    transit_distance: m, channel exit to trigger site (zero allowed)
    ion_diameter: m, reporting reference for the spread ratio
    """

    mass: float
    temperature: float
    confinement_width: float
    transit_distance: float
    ion_diameter: float

    def __post_init__(self):
        for name in ("mass", "temperature", "confinement_width", "ion_diameter"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.transit_distance < 0.0:
            raise ValidationError(
                f"transit_distance must be >= 0, got {self.transit_distance}"
            )


def calcium_ion(
    temperature: float = BODY_TEMPERATURE_K,
    confinement_width: float = 1e-9,
    transit_distance: float = 50e-9,
    ion_diameter: float = 0.2e-9,
) -> IonParameters:
    """Ca2+ defaults: 40.078 u, body temperature, 1 nm channel, 50 nm
    transit, 0.2 nm ionic diameter."""
    return IonParameters(
        mass=CALCIUM_MASS_AMU * ATOMIC_MASS_KG,
        temperature=temperature,
        confinement_width=confinement_width,
        transit_distance=transit_distance,
        ion_diameter=ion_diameter,
    )


@dataclass(frozen=True)
class EstimateReport:
    """All derived quantities plus the conventions used to derive them.

    Every field is recomputable from the parameters: delta_v =
    hbar / (m * confinement_width), v_thermal = sqrt(3kT/m),
    velocity_ratio = v_thermal / delta_v, transit_time =
    transit_distance / v_thermal, spread_at_trigger = delta_v *
    transit_time, spread_to_ion_size = spread_at_trigger / ion_diameter.
    """

    parameters: IonParameters
    delta_v: float
    v_thermal: float
    velocity_ratio: float
    transit_time: float
    spread_at_trigger: float
    spread_to_ion_size: float
    uncertainty_convention: str = UNCERTAINTY_CONVENTION
    thermal_convention: str = THERMAL_CONVENTION

    def __post_init__(self):
        if not (self.delta_v > 0.0 and self.v_thermal > 0.0 and self.velocity_ratio > 0.0):
            raise ValidationError("velocity fields must be strictly positive")
        if self.transit_time < 0.0 or self.spread_at_trigger < 0.0:
            raise ValidationError("transit fields must be non-negative")
        expected = self.v_thermal / self.delta_v
        if abs(self.velocity_ratio - expected) > 1e-12 * expected:
            raise ValidationError(
                f"velocity_ratio {self.velocity_ratio!r} is not v_thermal/delta_v"
            )

    def as_dict(self) -> dict:
        return {
            "delta_v": self.delta_v,
            "v_thermal": self.v_thermal,
            "velocity_ratio": self.velocity_ratio,
            "transit_time": self.transit_time,
            "spread_at_trigger": self.spread_at_trigger,
            "spread_to_ion_size": self.spread_to_ion_size,
            "uncertainty_convention": self.uncertainty_convention,
            "thermal_convention": self.thermal_convention,
        }


def _report(p: IonParameters) -> EstimateReport:
    delta_v = HBAR / (p.mass * p.confinement_width)
    v_thermal = float(np.sqrt(3.0 * BOLTZMANN * p.temperature / p.mass))
    transit_time = p.transit_distance / v_thermal
    spread = delta_v * transit_time
    return EstimateReport(
        parameters=p,
        delta_v=delta_v,
        v_thermal=v_thermal,
        velocity_ratio=v_thermal / delta_v,
        transit_time=transit_time,
        spread_at_trigger=spread,
        spread_to_ion_size=spread / p.ion_diameter,
    )


def velocity_ratio(p: IonParameters) -> EstimateReport:
    """Compare the confinement-imposed velocity spread with thermal speed.

    Ca2+ defaults give delta_v ~ 1.6 m/s against v_thermal ~ 440 m/s, a
    ratio near 280. The full report is returned; the velocity triple is
    the part this operation is about.
    """
    return _report(p)


def spread_at_trigger(p: IonParameters) -> EstimateReport:
    """Ballistic transverse spread accumulated over the transit.

    spread = delta_v * (transit_distance / v_thermal). Ca2+ defaults give
    about 0.18 nm over 50 nm of travel, roughly the ion's own diameter.
    Collisions and diffusion are deliberately ignored; this is the
    free-flight number.
    """
    return _report(p)
