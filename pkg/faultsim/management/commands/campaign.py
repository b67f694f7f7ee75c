import os

from django.conf import settings
from django.core.management.base import BaseCommand

from faultsim.campaign import run_campaigns
from faultsim.config import load_thresholds
from faultsim.models import Campaign
from faultsim.reports import render_table, summary_document, write_json, write_shots_csv, write_table
from faultsim.utils import ConfigCommandMixin


class Command(ConfigCommandMixin, BaseCommand):
    help = 'Run every scenario of a config as a power x duration sweep and write CSV, JSON and table reports'

    def add_command_arguments(self, parser):
        parser.add_argument('--workers', type=int, help='worker processes (default: FAULTLAB_WORKERS)')
        parser.add_argument('--thresholds', help='thresholds JSON overriding the config (e.g. written by calibrate)')
        parser.add_argument('--scenario', action='append', help='run only the named scenario (repeatable)')
        parser.add_argument('--archive', action='store_true', help='store the campaign in the database')
        parser.add_argument('--title', help='archive title (default: config file name)')

    def run_command(self, config, **options):
        thresholds = load_thresholds(options['thresholds']) if options['thresholds'] else config.require_thresholds()
        if options['scenario']:
            specs = [config.scenario(name) for name in options['scenario']]
        else:
            specs = list(config.scenarios)
        if not specs:
            config.scenario()

        summary = run_campaigns(specs, config.layout, thresholds, config.objectives, config.delta_ns, config.seed,
                                self.workers(options), config.initial_state)

        repeatable_at = settings.FAULTLAB['REPEATABLE_AT']
        write_shots_csv(summary.shots, config.output.path('shots_csv'))
        write_json(summary_document(summary, repeatable_at, config.seed), config.output.path('summary_json'))
        write_table(summary, repeatable_at, config.output.path('table_md'))
        self.stdout.write(render_table(summary, repeatable_at))
        self.stdout.write('{} shots written to {}'.format(len(summary.shots), config.output.directory))

        if options['archive']:
            title = options['title'] or os.path.splitext(os.path.basename(config.source))[0]
            campaign = Campaign.archive(title, config, summary)
            self.stdout.write('archived as {}'.format(campaign.slug))
