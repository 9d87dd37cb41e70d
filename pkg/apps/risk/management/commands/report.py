"""
Django management command to print the scenario report of a model
"""
from django.core.management.base import BaseCommand

from apps.risk.commandutils import add_model_argument, dump_json, load_model_or_fail, usage_error
from apps.risk.services import RiskReportService
from core.exceptions import RailRiskError


class Command(BaseCommand):
    help = 'Scenario grid, summary rows and anchor table for a model'

    def add_arguments(self, parser):
        add_model_argument(parser)
        parser.add_argument('--json', action='store_true', help='Machine-readable output')

    def handle(self, *args, **options):
        model = load_model_or_fail(options['model'])
        try:
            report = RiskReportService.build_report(model)
        except RailRiskError as e:
            raise usage_error(e) from None

        if options['json']:
            self.stdout.write(dump_json(report))
        else:
            self.stdout.write(RiskReportService.render_report(report))
