from dataclasses import replace

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand

from faultsim.campaign import PhasePolicy, run_shot
from faultsim.choices import PhaseMode, ScenarioKind
from faultsim.config import load_thresholds
from faultsim.engine import IllumUpset, StuckState, VoterSet
from faultsim.reports import write_trace_csv
from faultsim.utils import ConfigCommandMixin


def describe_fault(fault, layout):
    cell = layout.cell(fault.cell_id)
    where = 'cell {} (stage {} {})'.format(cell.id, cell.stage, cell.kind)
    if isinstance(fault, (IllumUpset, VoterSet)):
        return '{} {} t0={:g} ns d={:g} ns'.format(type(fault).__name__, where, fault.t0_ns, fault.duration_ns)
    if isinstance(fault, StuckState):
        return 'StuckState {} value={} from={:g} ns until={}'.format(where, fault.value, fault.from_ns, fault.until)
    return repr(fault)


class Command(ConfigCommandMixin, BaseCommand):
    help = 'Fire a single laser shot at the register and classify the resulting output trace'

    def add_command_arguments(self, parser):
        parser.add_argument('--power', type=float, required=True, help='laser power, percent of maximum')
        parser.add_argument('--duration', type=float, required=True, help='pulse duration, ns')
        parser.add_argument('--x', type=float, help='spot center x, um (with --y overrides the scenario target)')
        parser.add_argument('--y', type=float, help='spot center y, um')
        parser.add_argument('--phase', type=float, help='clock phase relative to the trigger, ns')
        parser.add_argument('--scenario', help='scenario name (default: the first one)')
        parser.add_argument('--objective', help='objective name override')
        parser.add_argument('--input-bit', type=int, choices=[0, 1], help='constant register input override')
        parser.add_argument('--thresholds', help='thresholds JSON (e.g. written by calibrate)')
        parser.add_argument('--csv', help='write the observed output trace to this CSV file')

    def run_command(self, config, **options):
        power, duration = options['power'], options['duration']
        if not 0.0 <= power <= 100.0:
            raise ValidationError('--power must lie in [0, 100], got {:g}'.format(power))
        if not duration > 0:
            raise ValidationError('--duration must be positive, got {:g}'.format(duration))
        if (options['x'] is None) != (options['y'] is None):
            raise ValidationError('--x and --y must be given together')

        spec = config.scenario(options['scenario'])
        changes = {'repetitions': 1, 'powers': (power,), 'durations_ns': (duration,)}
        if options['x'] is not None:
            changes.update(kind=ScenarioKind.CUSTOM, center=(options['x'], options['y']))
        phase = spec.phase.phase_ns if options['phase'] is None else options['phase']
        changes['phase'] = PhasePolicy(PhaseMode.FIXED, phase)
        if options['objective']:
            changes['objective'] = options['objective']
        if options['input_bit'] is not None:
            changes['input_bit'] = options['input_bit']
        spec = replace(spec, **changes)

        thresholds = load_thresholds(options['thresholds']) if options['thresholds'] else config.require_thresholds()
        result = run_shot(spec, power, duration, config.layout, thresholds, config.objectives, config.delta_ns,
                          config.seed, keep_trace=True, initial_state=config.initial_state)

        self.stdout.write('class: {}'.format(result.fault_class))
        self.stdout.write('burst length: {}'.format(result.fault_class.burst_len))
        self.stdout.write('induced faults: {}'.format(result.n_faults))
        for fault in result.faults:
            self.stdout.write('  {}'.format(describe_fault(fault, config.layout)))
        if options['csv']:
            write_trace_csv(result.trace, options['csv'])
            self.stdout.write('trace written to {}'.format(options['csv']))
