from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand

from faultsim.calibration import calibrate
from faultsim.choices import ScenarioKind
from faultsim.reports import write_json
from faultsim.utils import ConfigCommandMixin


class Command(ConfigCommandMixin, BaseCommand):
    help = 'Fit the flip-flop thresholds to the measured minimum powers listed in optics.targets'

    def add_command_arguments(self, parser):
        parser.add_argument('--out', help='thresholds JSON path (default: output.thresholds_json of the config)')
        parser.add_argument('--skip-verification', action='store_true',
                            help='report predicted minima without confirming them by simulated shots')

    def run_command(self, config, **options):
        if not config.targets:
            raise ValidationError('optics.targets: calibration needs at least one target')
        base_model = config.require_thresholds()
        template = next((s for s in config.scenarios if s.kind == ScenarioKind.TWO_FF), None)
        kwargs = {'powers': template.powers} if template else {}

        result = calibrate(config.targets, config.layout, config.objectives, base_model, template,
                           delta_ns=config.delta_ns, seed=config.seed,
                           verify=not options['skip_verification'], **kwargs)

        out = options['out'] or config.output.path('thresholds_json')
        write_json(result.to_dict(), out)
        self.stdout.write(self.residual_report(result.residuals))
        self.stdout.write('ff thresholds: theta_power={!r} theta_dose={!r}'.format(
            result.model.ff.theta_power, result.model.ff.theta_dose))
        self.stdout.write('thresholds written to {}'.format(out))
