from django.core.management.base import BaseCommand

from faultsim.reports import write_json
from faultsim.utils import ConfigCommandMixin


class Command(ConfigCommandMixin, BaseCommand):
    help = 'Build the TMR shift-register layout described by a config and write it as JSON'

    def add_command_arguments(self, parser):
        parser.add_argument('out', nargs='?', help='layout JSON path (default: output.layout_json of the config)')

    def run_command(self, config, **options):
        layout = config.layout
        out = options['out'] or config.output.path('layout_json')
        write_json(layout.to_dict(), out)
        self.stdout.write('stages: {}, flip-flops: {}, voters: {}, cells: {}'.format(
            layout.stages, layout.ff_count, layout.voter_count, len(layout.cells)))
        self.stdout.write('layout written to {}'.format(out))
