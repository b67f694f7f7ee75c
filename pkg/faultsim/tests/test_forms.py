import json
import os
import tempfile
from unittest.mock import patch

from django.conf import settings
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings

from faultsim.choices import ScenarioKind
from faultsim.config import load_config, load_thresholds, parse_config
from faultsim.forms import NumberListField, ScenarioForm

from .base import CONFIG_DIR, TABLE_THRESHOLDS, small_config, write_config


class ParseConfigTest(SimpleTestCase):

    def test_small_config(self):
        config = parse_config(small_config(), base_dir='/tmp/run')
        self.assertEqual(config.layout.stages, 8)
        self.assertEqual(config.thresholds, TABLE_THRESHOLDS)
        self.assertEqual(config.seed, 7)
        self.assertEqual(sorted(config.objectives), ['20x', '5x', 'single-mode'])
        spec = config.scenario('ff12_20x')
        self.assertEqual(spec.kind, ScenarioKind.TWO_FF)
        self.assertEqual(spec.powers, (0.0, 40.0, 100.0))
        self.assertEqual(spec.phase.jitter_ns, 10.0)
        self.assertEqual(config.output.path('shots_csv'), os.path.join('/tmp/run', 'output', 'shots.csv'))

    def test_defaults(self):
        data = small_config()
        del data['scenarios'][0]['repetitions']
        del data['timing']
        config = parse_config(data)
        self.assertEqual(config.scenarios[0].repetitions, settings.FAULTLAB['REPETITIONS'])
        self.assertEqual(config.delta_ns, 1.0)
        self.assertEqual(config.initial_state, 'prefill')

    def test_every_bundled_config_parses(self):
        names = sorted(n for n in os.listdir(CONFIG_DIR) if n.endswith('.json'))
        self.assertTrue(names)
        for name in names:
            config = load_config(os.path.join(CONFIG_DIR, name))
            self.assertEqual(config.layout.stages, 1024, name)
            self.assertIsNotNone(config.thresholds, name)

    def test_table_targets(self):
        config = load_config(os.path.join(CONFIG_DIR, 'calibration_targets_table1.json'))
        self.assertEqual([t.min_power_pct for t in config.targets], [40, 45, 65, 55, 80, 90, 90, 60])

    def test_occlusion_map(self):
        data = small_config()
        data['layout']['occlusion'] = {'mode': 'map', 'values': {'3': 1.0}}
        self.assertEqual(parse_config(data).layout.cell(3).occlusion, 1.0)

    def test_unknown_scenario_name(self):
        with self.assertRaisesMessage(ValidationError, "no scenario named 'missing'"):
            parse_config(small_config()).scenario('missing')

    @override_settings(FAULTLAB=dict(settings.FAULTLAB, POWER_STEP_PCT=25.0))
    def test_power_grid_from_settings(self):
        data = small_config()
        del data['scenarios'][0]['powers']
        self.assertEqual(parse_config(data).scenarios[0].powers, (0.0, 25.0, 50.0, 75.0, 100.0))

    @override_settings(FAULTLAB=dict(settings.FAULTLAB, POWER_STEP_PCT=30.0))
    def test_power_step_must_divide_full_scale(self):
        data = small_config()
        del data['scenarios'][0]['powers']
        with self.assertRaisesMessage(ValidationError, 'power step must divide 100'):
            parse_config(data)

    @override_settings(FAULTLAB=dict(settings.FAULTLAB, SEED=99))
    def test_seed_from_environment(self):
        with patch.dict(os.environ, {'FAULTLAB_SEED': '99'}):
            self.assertEqual(parse_config(small_config()).seed, 99)
        self.assertEqual(parse_config(small_config()).seed, 7)


class ConfigErrorTest(SimpleTestCase):

    def assertInvalid(self, data, message):
        with self.assertRaisesMessage(ValidationError, message):
            parse_config(data)

    def test_missing_geometry(self):
        data = small_config()
        del data['layout']['geometry']
        self.assertInvalid(data, 'layout.geometry')

    def test_unknown_field(self):
        self.assertInvalid(small_config(extra=1), 'config: unknown field(s) extra')
        data = small_config()
        data['scenarios'][0]['power'] = [10]
        self.assertInvalid(data, 'scenarios[0]: unknown field(s) power')

    def test_unsorted_powers(self):
        data = small_config()
        data['scenarios'][0]['powers'] = [40, 0]
        self.assertInvalid(data, 'scenarios[0].powers')

    def test_power_out_of_range(self):
        data = small_config()
        data['scenarios'][0]['powers'] = [0, 150]
        self.assertInvalid(data, 'powers must lie in [0, 100]')

    def test_unknown_objective(self):
        data = small_config()
        data['scenarios'][0]['objective'] = '100x'
        self.assertInvalid(data, 'scenarios[0].objective')

    def test_stage_out_of_range(self):
        data = small_config()
        data['scenarios'][0]['target_stage'] = 8
        self.assertInvalid(data, 'target_stage')

    def test_bad_geometry(self):
        data = small_config()
        data['layout']['geometry']['ff_width_um'] = -1
        self.assertInvalid(data, 'geometry.ff_width_um')

    def test_bad_skew(self):
        self.assertInvalid(small_config(timing={'delta_ns': 0}), 'timing.delta_ns')

    def test_bad_objective(self):
        data = small_config()
        data['optics']['objectives'] = [{'name': 'x', 'spot_diameter_um': 0}]
        self.assertInvalid(data, 'optics.objectives[0].spot_diameter_um')

    def test_thresholds_twice(self):
        data = small_config()
        data['optics']['thresholds_file'] = 'thresholds.json'
        self.assertInvalid(data, 'optics: give either thresholds or thresholds_file')

    def test_threshold_range(self):
        data = small_config()
        data['optics']['thresholds']['ff']['theta_power'] = 2
        self.assertInvalid(data, 'optics.thresholds.ff.theta_power')

    def test_duplicate_scenarios(self):
        data = small_config()
        data['scenarios'].append(dict(data['scenarios'][0]))
        self.assertInvalid(data, 'names must be unique')

    def test_custom_needs_center(self):
        data = small_config()
        data['scenarios'][0]['kind'] = 'custom'
        self.assertInvalid(data, 'custom scenarios need a center')

    def test_bad_target(self):
        data = small_config()
        data['optics']['targets'] = [{'frequency_mhz': 10, 'objective': '20x', 'duration_ns': 0,
                                      'min_power_pct': 40}]
        self.assertInvalid(data, 'optics.targets[0].duration_ns')


class ConfigFileTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_relative_thresholds_file(self):
        with open(os.path.join(self.tmp.name, 'fitted.json'), 'w') as f:
            json.dump({'thresholds': TABLE_THRESHOLDS.to_dict(), 'tolerance_pct': 5.0, 'residuals': []}, f)
        data = small_config()
        data['optics'] = {'thresholds_file': 'fitted.json'}
        config = load_config(write_config(self.tmp.name, data))
        self.assertEqual(config.thresholds, TABLE_THRESHOLDS)
        self.assertEqual(config.output.directory, os.path.join(self.tmp.name, 'output'))

    def test_plain_thresholds_file(self):
        path = os.path.join(self.tmp.name, 'plain.json')
        with open(path, 'w') as f:
            json.dump(TABLE_THRESHOLDS.to_dict(), f)
        self.assertEqual(load_thresholds(path), TABLE_THRESHOLDS)

    def test_missing_thresholds(self):
        data = small_config()
        del data['optics']['thresholds']
        config = load_config(write_config(self.tmp.name, data))
        with self.assertRaisesMessage(ValidationError, 'optics.thresholds: required'):
            config.require_thresholds()

    def test_broken_json(self):
        path = os.path.join(self.tmp.name, 'broken.json')
        with open(path, 'w') as f:
            f.write('{"layout": ')
        with self.assertRaisesMessage(ValidationError, 'not valid JSON'):
            load_config(path)

    def test_missing_file(self):
        with self.assertRaisesMessage(ValidationError, 'cannot read'):
            load_config(os.path.join(self.tmp.name, 'nowhere.json'))


class FieldTest(SimpleTestCase):

    def test_number_list(self):
        field = NumberListField(required=False)
        self.assertEqual(field.clean([1, 2.5]), [1.0, 2.5])
        with self.assertRaises(ValidationError):
            field.clean([1, 'two'])
        with self.assertRaises(ValidationError):
            field.clean([True])

    def test_center_needs_two_numbers(self):
        form = ScenarioForm(data={'name': 'x', 'kind': 'custom', 'center': [1, 2, 3]})
        self.assertFalse(form.is_valid())
        self.assertIn('center', form.errors)
