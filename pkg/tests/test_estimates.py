import numpy as np
import pytest

from zenosim.errors import ValidationError
from zenosim.estimates import (
    ATOMIC_MASS_KG,
    BOLTZMANN,
    CALCIUM_MASS_AMU,
    HBAR,
    EstimateReport,
    IonParameters,
    calcium_ion,
    spread_at_trigger,
    velocity_ratio,
)

# frozen against an independent hand calculation:
# delta_v = hbar/(m*w), v_th = sqrt(3kT/m), m = 40.078 * 1.66053907e-27 kg
RATIO_CA = 277.1944461005717
SPREAD_CA = 1.8037879439279597e-10
SPREAD_TO_ION_CA = 0.9018939719639799


class TestCalciumDefaults:
    def test_frozen_ratio(self):
        rep = velocity_ratio(calcium_ion())
        assert rep.velocity_ratio == pytest.approx(RATIO_CA, rel=1e-12)

    def test_ratio_in_published_band(self):
        rep = velocity_ratio(calcium_ion())
        assert 277.0 <= rep.velocity_ratio <= 279.0

    def test_frozen_spread(self):
        rep = spread_at_trigger(calcium_ion())
        assert rep.spread_at_trigger == pytest.approx(SPREAD_CA, rel=1e-12)
        assert 0.16e-9 <= rep.spread_at_trigger <= 0.20e-9

    def test_spread_comparable_to_ion_size(self):
        rep = spread_at_trigger(calcium_ion())
        assert rep.spread_to_ion_size == pytest.approx(SPREAD_TO_ION_CA, rel=1e-12)
        assert 0.5 <= rep.spread_to_ion_size <= 1.5

    def test_hand_recomputation(self):
        m = CALCIUM_MASS_AMU * ATOMIC_MASS_KG
        dv = HBAR / (m * 1e-9)
        vth = np.sqrt(3.0 * BOLTZMANN * 310.0 / m)
        rep = velocity_ratio(calcium_ion())
        assert rep.delta_v == pytest.approx(dv, rel=1e-12)
        assert rep.v_thermal == pytest.approx(vth, rel=1e-12)
        assert rep.transit_time == pytest.approx(50e-9 / vth, rel=1e-12)

    def test_convention_band_covers_half_hbar_variant(self):
        # ratio with delta_p*delta_x = hbar/2 is exactly twice as large;
        # both conventions land in the coarse a-few-hundred window
        ratio = velocity_ratio(calcium_ion()).velocity_ratio
        assert 150.0 <= ratio <= 600.0
        assert 150.0 <= 2.0 * ratio <= 600.0

    def test_conventions_recorded(self):
        rep = velocity_ratio(calcium_ion())
        assert "hbar" in rep.uncertainty_convention
        assert "3 k T" in rep.thermal_convention
        d = rep.as_dict()
        assert d["uncertainty_convention"] == rep.uncertainty_convention
        assert d["velocity_ratio"] == rep.velocity_ratio


class TestScalingLaws:
    def test_ratio_scales_with_confinement_width(self):
        base = velocity_ratio(calcium_ion()).velocity_ratio
        wide = velocity_ratio(calcium_ion(confinement_width=2e-9)).velocity_ratio
        assert wide == pytest.approx(2.0 * base, rel=1e-12)

    def test_ratio_scales_with_sqrt_temperature(self):
        base = velocity_ratio(calcium_ion()).velocity_ratio
        hot = velocity_ratio(calcium_ion(temperature=4 * 310.0)).velocity_ratio
        assert hot == pytest.approx(2.0 * base, rel=1e-12)

    def test_spread_linear_in_transit_distance(self):
        base = spread_at_trigger(calcium_ion()).spread_at_trigger
        far = spread_at_trigger(calcium_ion(transit_distance=100e-9))
        assert far.spread_at_trigger == pytest.approx(2.0 * base, rel=1e-12)

    def test_zero_transit_gives_zero_spread(self):
        rep = spread_at_trigger(calcium_ion(transit_distance=0.0))
        assert rep.spread_at_trigger == 0.0
        assert rep.transit_time == 0.0
        assert rep.velocity_ratio == pytest.approx(RATIO_CA, rel=1e-12)

    def test_hotter_ion_spreads_less(self):
        # delta_v ignores temperature but transit time falls as 1/sqrt(T),
        # so 4x the temperature halves the accumulated spread
        base = spread_at_trigger(calcium_ion()).spread_at_trigger
        hot = spread_at_trigger(calcium_ion(temperature=4 * 310.0)).spread_at_trigger
        assert hot == pytest.approx(base / 2.0, rel=1e-12)


class TestValidation:
    def test_rejects_nonpositive_inputs(self):
        good = dict(
            mass=1.0, temperature=1.0, confinement_width=1.0,
            transit_distance=1.0, ion_diameter=1.0,
        )
        for field in ("mass", "temperature", "confinement_width", "ion_diameter"):
            with pytest.raises(ValidationError):
                IonParameters(**{**good, field: 0.0})
        with pytest.raises(ValidationError):
            IonParameters(**{**good, "transit_distance": -1.0})

    def test_report_rejects_inconsistent_ratio(self):
        rep = velocity_ratio(calcium_ion())
        with pytest.raises(ValidationError):
            EstimateReport(
                parameters=rep.parameters,
                delta_v=rep.delta_v,
                v_thermal=rep.v_thermal,
                velocity_ratio=rep.velocity_ratio * 1.01,
                transit_time=rep.transit_time,
                spread_at_trigger=rep.spread_at_trigger,
                spread_to_ion_size=rep.spread_to_ion_size,
            )

    def test_both_entry_points_agree(self):
        p = calcium_ion()
        assert velocity_ratio(p) == spread_at_trigger(p)
