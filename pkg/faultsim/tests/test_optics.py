import math

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import assume, given, settings, strategies as st

from faultsim.choices import CellKind, OcclusionMode
from faultsim.engine import IllumUpset, VoterSet
from faultsim.layout import Cell, OcclusionSpec, build_register
from faultsim.optics import (
    LaserPulse, ObjectiveProfile, Threshold, ThresholdModel, effective_power, exposures, induce_faults,
)

from .base import OBJECTIVES, TABLE_THRESHOLDS

TWO_FF_CENTER = (10.25, 1.95)


def fault_cells(faults):
    return [f.cell_id for f in faults]


class EffectivePowerTest(SimpleTestCase):

    def test_half_covered_partly_occluded_cell(self):
        layout = build_register(1, occlusion_spec=OcclusionSpec(OcclusionMode.MAP, values={0: 0.2}))
        cell = layout.cell(0)
        radius = 1.0e4
        # край огромного пятна проходит по середине триггера
        wide = ObjectiveProfile('wide', 2 * radius)
        pulse = LaserPulse((cell.x + cell.width / 2 - radius, cell.centroid[1]), wide, 80.0, 100.0)
        self.assertAlmostEqual(effective_power(pulse, cell, layout), 0.32, places=3)

    def test_transmission_scales_power(self):
        layout = build_register(1)
        voter = layout.stage_cell(0, CellKind.VOTER)
        pulse = LaserPulse(voter.centroid, OBJECTIVES['single-mode'], 100.0, 100.0)
        # пятно 2 мкм целиком внутри мажоритара 6 x 3.9 мкм
        self.assertAlmostEqual(effective_power(pulse, voter, layout), 0.5 * math.pi / (6.0 * 3.9), places=9)

    def test_foreign_cell_rejected(self):
        layout = build_register(1)
        stranger = Cell(0, 0, CellKind.FF1, 500.0, 500.0, 10.0, 3.9)
        pulse = LaserPulse((0.0, 0.0), OBJECTIVES['20x'], 50.0, 100.0)
        with self.assertRaises(ValidationError):
            effective_power(pulse, stranger, layout)

    def test_two_ff_spot_covers_both_flip_flops_equally(self):
        layout = build_register(4)
        pulse = LaserPulse(TWO_FF_CENTER, OBJECTIVES['20x'], 100.0, 130.0)
        hit = dict(exposures(pulse, layout))
        self.assertEqual(sorted(hit), [0, 1])
        self.assertAlmostEqual(hit[0], hit[1], places=12)
        self.assertAlmostEqual(hit[0], 0.716, places=3)

    def test_whole_cell_spot(self):
        layout = build_register(4)
        pulse = LaserPulse(layout.stage_cells(0)[0].centroid, OBJECTIVES['5x'], 100.0, 80.0)
        ids = [cell_id for cell_id, _ in exposures(pulse, layout)]
        self.assertTrue({0, 1, 2}.issubset(ids))
        self.assertEqual(ids, sorted(ids))


class ThresholdTest(SimpleTestCase):

    def test_both_comparisons_are_inclusive(self):
        threshold = Threshold(0.5, 10.0)
        self.assertTrue(threshold.reached(0.5, 20.0))
        self.assertFalse(threshold.reached(0.49, 100.0))
        self.assertFalse(threshold.reached(0.6, 16.0))

    def test_zero_power_never_faults(self):
        self.assertFalse(Threshold(0.0, 0.0).reached(0.0, 1000.0))

    def test_ranges(self):
        with self.assertRaisesMessage(ValidationError, 'theta_power'):
            Threshold(1.5, 0.0)
        with self.assertRaisesMessage(ValidationError, 'theta_dose'):
            Threshold(0.5, -1.0)

    def test_model_dict(self):
        self.assertEqual(ThresholdModel.from_dict(TABLE_THRESHOLDS.to_dict()), TABLE_THRESHOLDS)
        self.assertEqual(TABLE_THRESHOLDS.for_kind(CellKind.VOTER).theta_power, 0.8)
        self.assertEqual(TABLE_THRESHOLDS.for_kind('FF2').theta_dose, 35.0)


class InduceFaultsTest(SimpleTestCase):

    def setUp(self):
        self.layout = build_register(8)

    def pulse(self, power, duration=130.0, center=TWO_FF_CENTER, objective='20x', trigger=110.0):
        return LaserPulse(center, OBJECTIVES[objective], power, duration, trigger)

    def test_minimum_power_for_two_flip_flops(self):
        self.assertEqual(induce_faults(self.pulse(35.0), self.layout, TABLE_THRESHOLDS), [])
        faults = induce_faults(self.pulse(40.0), self.layout, TABLE_THRESHOLDS)
        self.assertEqual(faults, [IllumUpset(0, 110.0, 130.0), IllumUpset(1, 110.0, 130.0)])

    def test_zero_power(self):
        self.assertEqual(induce_faults(self.pulse(0.0), self.layout, TABLE_THRESHOLDS), [])

    def test_full_occlusion(self):
        occluded = self.layout.with_occlusion({0: 1.0, 1: 1.0, 2: 1.0})
        self.assertEqual(induce_faults(self.pulse(100.0, 280.0), occluded, TABLE_THRESHOLDS), [])

    def test_single_mode_spot_below_voter_threshold(self):
        voter = self.layout.stage_cell(0, CellKind.VOTER)
        pulse = self.pulse(100.0, 280.0, voter.centroid, 'single-mode')
        self.assertEqual(fault_cells(induce_faults(pulse, self.layout, TABLE_THRESHOLDS)), [])
        sensitive = ThresholdModel(TABLE_THRESHOLDS.ff, Threshold(0.05, 0.0))
        self.assertEqual(induce_faults(pulse, self.layout, sensitive), [VoterSet(voter.id, 110.0, 280.0)])

    def test_off_chip(self):
        self.assertEqual(induce_faults(self.pulse(100.0, center=(-500.0, -500.0)), self.layout, TABLE_THRESHOLDS), [])

    @settings(max_examples=60, deadline=None)
    @given(low=st.integers(0, 100), high=st.integers(0, 100), duration=st.sampled_from([50, 80, 130, 280]),
           objective=st.sampled_from(['single-mode', '20x', '5x']))
    def test_monotone_in_power(self, low, high, duration, objective):
        assume(low <= high)
        weak = fault_cells(induce_faults(self.pulse(low, duration, objective=objective), self.layout,
                                         TABLE_THRESHOLDS))
        strong = fault_cells(induce_faults(self.pulse(high, duration, objective=objective), self.layout,
                                           TABLE_THRESHOLDS))
        self.assertTrue(set(weak).issubset(strong))


class ValidationTest(SimpleTestCase):

    def test_objective(self):
        with self.assertRaisesMessage(ValidationError, 'spot_diameter_um'):
            ObjectiveProfile('broken', 0.0)
        with self.assertRaisesMessage(ValidationError, 'transmission'):
            ObjectiveProfile('broken', 5.0, transmission=0.0)

    def test_pulse(self):
        with self.assertRaisesMessage(ValidationError, 'power_pct'):
            LaserPulse((0, 0), OBJECTIVES['20x'], 150.0, 100.0)
        with self.assertRaisesMessage(ValidationError, 'duration_ns'):
            LaserPulse((0, 0), OBJECTIVES['20x'], 50.0, 0.0)
        with self.assertRaisesMessage(ValidationError, 'trigger_ns'):
            LaserPulse((0, 0), OBJECTIVES['20x'], 50.0, 10.0, -1.0)
