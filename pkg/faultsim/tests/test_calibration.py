from dataclasses import replace

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from faultsim.calibration import CalibrationTarget, calibrate
from faultsim.campaign import PhasePolicy, ScenarioSpec, run_campaigns
from faultsim.choices import PhaseMode, ScenarioKind
from faultsim.config import load_config
from faultsim.exceptions import CalibrationError
from faultsim.layout import build_register
from faultsim.optics import Threshold, ThresholdModel

from .base import GRID, OBJECTIVES, TABLE_THRESHOLDS, bundled

AIM = ScenarioSpec('aim', ScenarioKind.TWO_FF, trigger_ns=25.0, phase=PhasePolicy(PhaseMode.FIXED, 0.0),
                   repetitions=1)


class CalibrateTest(SimpleTestCase):

    def setUp(self):
        self.layout = build_register(16)

    def test_recovers_minima_of_a_known_model(self):
        model = ThresholdModel(Threshold(0.2, 30.0), TABLE_THRESHOLDS.voter)
        points = [(10.0, '20x', 130.0), (10.0, '20x', 280.0), (10.0, '5x', 80.0), (50.0, '5x', 50.0),
                  (50.0, '20x', 60.0)]
        specs = [replace(AIM, name='p{}'.format(i), frequency_mhz=f, objective=o, durations_ns=(d,), powers=GRID)
                 for i, (f, o, d) in enumerate(points)]
        summary = run_campaigns(specs, self.layout, model, OBJECTIVES)
        targets = [CalibrationTarget(f, o, d, summary.row('p{}'.format(i)).min_power)
                   for i, (f, o, d) in enumerate(points)]

        result = calibrate(targets, self.layout, OBJECTIVES, TABLE_THRESHOLDS, AIM)
        self.assertEqual(result.max_residual, 0.0)
        self.assertEqual(result.tolerance, 5.0)
        self.assertEqual(result.model.voter, TABLE_THRESHOLDS.voter)

    def test_table_minima(self):
        config = load_config(bundled('calibration_targets_table1.json'))
        result = calibrate(config.targets, self.layout, config.objectives, config.thresholds, config.scenarios[0],
                           seed=config.seed)
        self.assertLessEqual(result.max_residual, 5.0)
        self.assertEqual(result.model.ff.theta_power, 0.0)
        self.assertTrue(34.39 < result.model.ff.theta_dose <= 35.63)
        self.assertEqual(len(result.to_dict()['residuals']), 8)

        specs = []
        for name in ('scenario2_10mhz.json', 'scenario2_50mhz.json'):
            specs.extend(replace(spec, repetitions=2) for spec in load_config(bundled(name)).scenarios)
        summary = run_campaigns(specs, self.layout, result.model, config.objectives, seed=config.seed)
        for target in config.targets:
            row = summary.row(frequency_mhz=target.frequency_mhz, input_bit=target.input_bit,
                              objective=target.objective)
            simulated = dict(row.min_power_by_duration)[target.duration_ns]
            self.assertLessEqual(abs(simulated - target.min_power_pct), 5.0, target.label())
        for objective in ('20x', '5x'):
            for bit in (0, 1):
                slow = summary.row(frequency_mhz=10.0, input_bit=bit, objective=objective)
                fast = summary.row(frequency_mhz=50.0, input_bit=bit, objective=objective)
                self.assertGreaterEqual(fast.min_power, slow.min_power)

    def test_contradictory_targets(self):
        targets = [CalibrationTarget(10.0, '20x', 130.0, 40.0), CalibrationTarget(10.0, '20x', 130.0, 70.0),
                   CalibrationTarget(10.0, '20x', 280.0, 20.0)]
        with self.assertRaises(CalibrationError) as ctx:
            calibrate(targets, self.layout, OBJECTIVES, TABLE_THRESHOLDS, AIM, verify=False)
        self.assertIsNotNone(ctx.exception.best_model)
        self.assertEqual(len(ctx.exception.residuals), 3)
        self.assertGreater(max(r.residual for r in ctx.exception.residuals), 5.0)

    def test_single_duration_warns(self):
        with self.assertLogs('faultsim.calibration', level='WARNING'):
            result = calibrate([CalibrationTarget(10.0, '20x', 130.0, 40.0)], self.layout, OBJECTIVES,
                               TABLE_THRESHOLDS, AIM)
        self.assertEqual(result.residuals[0].predicted_pct, 40.0)

    def test_unreachable_target(self):
        occluded = self.layout.with_occlusion({0: 1.0, 1: 1.0, 2: 1.0})
        with self.assertRaises(CalibrationError) as ctx:
            calibrate([CalibrationTarget(10.0, '20x', 130.0, 50.0), CalibrationTarget(10.0, '20x', 280.0, 30.0)],
                      occluded, OBJECTIVES, TABLE_THRESHOLDS, AIM, verify=False)
        self.assertIsNone(ctx.exception.residuals[0].to_dict()['residual'])

    def test_no_targets(self):
        with self.assertRaises(ValidationError):
            calibrate([], self.layout, OBJECTIVES, TABLE_THRESHOLDS)

    def test_unknown_objective(self):
        with self.assertRaisesMessage(ValidationError, 'unknown objective'):
            calibrate([CalibrationTarget(10.0, '100x', 130.0, 40.0)], self.layout, OBJECTIVES, TABLE_THRESHOLDS)

    def test_target_validation(self):
        with self.assertRaises(ValidationError):
            CalibrationTarget(10.0, '20x', 130.0, 140.0)
        self.assertEqual(CalibrationTarget(10.0, '20x', 130.0, 40.0).label(), '10 MHz / 20x / 130 ns / input 0')
