import csv
import filecmp
import json
import os
import tempfile
import time
from io import StringIO

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from faultsim.layout import RegisterLayout
from faultsim.models import Campaign

from .base import GRID, bundled, small_config, write_config


class CommandTestMixin:

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config = write_config(self.tmp.name, small_config())

    def call(self, *args, **kwargs):
        out, err = StringIO(), StringIO()
        call_command(*args, stdout=out, stderr=err, **kwargs)
        return out.getvalue()

    def assertExitCode(self, code, *args):
        with self.assertRaises(CommandError) as ctx:
            self.call(*args)
        self.assertEqual(ctx.exception.returncode, code)
        return str(ctx.exception)

    def path(self, *parts):
        return os.path.join(self.tmp.name, *parts)


class BuildLayoutCommandTest(CommandTestMixin, SimpleTestCase):

    def test_counts(self):
        out = self.call('build_layout', self.config, self.path('layout.json'))
        self.assertIn('stages: 8, flip-flops: 24, voters: 8, cells: 32', out)
        with open(self.path('layout.json')) as f:
            layout = RegisterLayout.from_dict(json.load(f))
        self.assertEqual(layout.stages, 8)

    def test_default_output(self):
        self.call('build_layout', self.config)
        self.assertTrue(os.path.exists(self.path('output', 'layout.json')))

    def test_missing_geometry(self):
        data = small_config()
        del data['layout']['geometry']
        message = self.assertExitCode(2, 'build_layout', write_config(self.tmp.name, data, 'bad.json'))
        self.assertIn('layout.geometry', message)

    def test_missing_config(self):
        self.assertExitCode(2, 'build_layout', self.path('nowhere.json'))


class ShootCommandTest(CommandTestMixin, SimpleTestCase):

    def shoot(self, *args):
        return self.call('shoot', self.config, *args)

    def test_zero_power(self):
        out = self.shoot('--power', '0', '--duration', '130')
        self.assertIn('class: NoInjection', out)
        self.assertIn('induced faults: 0', out)

    def test_bit_set(self):
        out = self.shoot('--power', '40', '--duration', '130', '--csv', self.path('trace.csv'))
        self.assertIn('class: TransientBitSet', out)
        self.assertIn('burst length: 2', out)
        self.assertIn('IllumUpset cell 0 (stage 0 FF1)', out)
        with open(self.path('trace.csv')) as f:
            rows = list(csv.DictReader(f))
        self.assertEqual([r['bit'] for r in rows[8:10]], ['1', '1'])
        self.assertEqual(rows[0]['edge_index'], '0')

    def test_input_bit_override(self):
        out = self.shoot('--power', '60', '--duration', '130', '--input-bit', '1')
        self.assertIn('class: TransientBitReset', out)

    def test_off_chip(self):
        out = self.shoot('--power', '100', '--duration', '280', '--x', '-500', '--y', '-500')
        self.assertIn('induced faults: 0', out)
        self.assertIn('class: NoInjection', out)

    def test_power_out_of_range(self):
        message = self.assertExitCode(2, 'shoot', self.config, '--power', '150', '--duration', '130')
        self.assertIn('--power', message)

    def test_x_without_y(self):
        self.assertExitCode(2, 'shoot', self.config, '--power', '50', '--duration', '130', '--x', '3')

    def test_unknown_scenario(self):
        self.assertExitCode(2, 'shoot', self.config, '--power', '50', '--duration', '130', '--scenario', 'nope')


class CampaignCommandTest(CommandTestMixin, SimpleTestCase):

    def run_in(self, name, *args):
        os.makedirs(self.path(name))
        config = write_config(self.path(name), small_config())
        self.call('campaign', config, *args)
        return self.path(name, 'output')

    def test_outputs(self):
        output = self.run_in('run')
        with open(os.path.join(output, 'shots.csv')) as f:
            rows = list(csv.DictReader(f))
        self.assertEqual([r['power_pct'] for r in rows], ['0.0', '40.0', '100.0'])
        self.assertEqual(rows[1]['class'], 'TransientBitSet')
        with open(os.path.join(output, 'summary.json')) as f:
            document = json.load(f)
        self.assertEqual(document['rows'][0]['min_power_pct'], 40.0)
        self.assertEqual((document['seed'], document['n_shots']), (7, 3))
        with open(os.path.join(output, 'table.md')) as f:
            self.assertIn('| ff12_20x | 10 | \'0\' | 20x | 40 | 130 |', f.read())

    def test_workers_do_not_change_results(self):
        serial = self.run_in('serial', '--workers', '1')
        parallel = self.run_in('parallel', '--workers', '2')
        for name in ('shots.csv', 'summary.json', 'table.md'):
            self.assertTrue(filecmp.cmp(os.path.join(serial, name), os.path.join(parallel, name), shallow=False),
                            name)

    def test_all_masked_run_succeeds(self):
        data = small_config()
        data['layout']['occlusion'] = {'mode': 'map', 'values': {'0': 1.0, '1': 1.0, '2': 1.0}}
        out = self.call('campaign', write_config(self.tmp.name, data, 'occluded.json'))
        self.assertIn('| ff12_20x | 10 | \'0\' | 20x | - | - | NoInjection |', out)

    def test_bad_workers(self):
        self.assertExitCode(2, 'campaign', self.config, '--workers', '0')


class FullRegisterCampaignCommandTest(CommandTestMixin, SimpleTestCase):
    """Полная кампания Scenario2 на 1024 ступенях: по времени и побайтно, один процесс против двух."""

    def run_bundled(self, name, workers):
        with open(bundled(name)) as f:
            data = json.load(f)
        data['output'] = {'directory': 'output'}
        directory = self.path('{}-{}'.format(name, workers))
        os.makedirs(directory)
        started = time.monotonic()
        self.call('campaign', write_config(directory, data), '--workers', str(workers))
        return data, os.path.join(directory, 'output'), time.monotonic() - started

    def test_serial_and_parallel_outputs_are_identical(self):
        for name in ('scenario2_10mhz.json', 'scenario2_50mhz.json'):
            data, serial, elapsed = self.run_bundled(name, 1)
            _, parallel, _ = self.run_bundled(name, 2)
            self.assertLess(elapsed, 60.0, name)
            for output in ('shots.csv', 'summary.json'):
                self.assertTrue(filecmp.cmp(os.path.join(serial, output), os.path.join(parallel, output),
                                            shallow=False), '{}: {}'.format(name, output))
            with open(os.path.join(serial, 'summary.json')) as f:
                document = json.load(f)
            expected = sum(len(s['powers']) * len(s['durations_ns']) for s in data['scenarios'])
            self.assertEqual(document['n_shots'], expected)


class ArchiveCommandTest(CommandTestMixin, TestCase):

    def test_archive(self):
        out = self.call('campaign', self.config, '--archive', '--title', 'Bench run')
        campaign = Campaign.objects.get()
        self.assertIn('archived as {}'.format(campaign.slug), out)
        self.assertEqual(campaign.title, 'Bench run')
        self.assertEqual(campaign.shots.count(), 3)
        self.assertEqual(campaign.seed, 7)

    def test_title_defaults_to_config_name(self):
        self.call('campaign', self.config, '--archive')
        self.assertEqual(Campaign.objects.get().title, 'config')


class CalibrateCommandTest(CommandTestMixin, SimpleTestCase):

    def config_with(self, targets):
        data = small_config()
        data['scenarios'][0]['powers'] = GRID
        data['optics']['targets'] = [
            {'frequency_mhz': 10, 'objective': '20x', 'duration_ns': d, 'min_power_pct': p} for d, p in targets
        ]
        return write_config(self.tmp.name, data, 'calibration.json')

    def test_fit_is_written(self):
        out = self.call('calibrate', self.config_with([(130, 40), (280, 20)]), '--out', self.path('fit.json'))
        self.assertIn('ff thresholds: theta_power=0.0', out)
        with open(self.path('fit.json')) as f:
            document = json.load(f)
        self.assertEqual(sorted(document), ['residuals', 'thresholds', 'tolerance_pct'])
        self.assertEqual([r['residual'] for r in document['residuals']], [0.0, 0.0])

    def test_fitted_thresholds_drive_shoot(self):
        self.call('calibrate', self.config_with([(130, 40), (280, 20)]), '--out', self.path('fit.json'))
        out = self.call('shoot', self.config, '--power', '40', '--duration', '130',
                        '--thresholds', self.path('fit.json'))
        self.assertIn('class: TransientBitSet', out)

    def test_infeasible_targets(self):
        message = self.assertExitCode(3, 'calibrate', self.config_with([(130, 10), (130, 90)]))
        self.assertIn('worst residual', message)

    def test_no_targets(self):
        self.assertExitCode(2, 'calibrate', self.config)
