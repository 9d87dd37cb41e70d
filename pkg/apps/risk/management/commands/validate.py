"""
Django management command to check a model against the published anchors and
the algebraic invariants; exits with 1 when any check fails
"""
from django.core.management.base import BaseCommand

from apps.risk.commandutils import (
    add_model_argument, dump_json, load_model_or_fail, usage_error, validation_error,
)
from apps.risk.services import RiskReportService
from core.exceptions import RailRiskError
from railrisk import __version__


class Command(BaseCommand):
    help = 'Validate a model against the risk anchors and invariants'

    def add_arguments(self, parser):
        add_model_argument(parser)
        parser.add_argument('--json', action='store_true', help='Machine-readable output')

    def handle(self, *args, **options):
        model = load_model_or_fail(options['model'])
        try:
            result = RiskReportService.validate(model)
        except RailRiskError as e:
            raise usage_error(e) from None

        if options['json']:
            self.stdout.write(dump_json({
                'tool_version': __version__,
                'kind': model.kind,
                'provenance': model.provenance,
                **result.to_dict(),
            }))
        else:
            self.stdout.write(RiskReportService.render_validation(result))

        if not result.passed:
            raise validation_error(f"Validation failed: {', '.join(result.failures)}")
        if not options['json']:
            self.stdout.write(self.style.SUCCESS('All checks passed'))
