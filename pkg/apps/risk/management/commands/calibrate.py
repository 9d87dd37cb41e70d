"""
Django management command to regenerate the reference model fixture
"""
from django.core.management.base import BaseCommand

from apps.risk.commandutils import usage_error, validation_error
from apps.risk.modelfile import save_model
from apps.risk.services import RiskReportService
from apps.synthgen.reference import FIXTURE_PATH, calibrate_reference, evaluate_anchors
from core.exceptions import CalibrationError, RailRiskError


class Command(BaseCommand):
    help = 'Calibrate the reference model against the risk anchors and write the fixture'

    def add_arguments(self, parser):
        parser.add_argument('--out', default=str(FIXTURE_PATH), help='Where to write the model file')

    def handle(self, *args, **options):
        try:
            model = calibrate_reference()
        except CalibrationError as e:
            for key, residual in sorted(e.residuals.items()):
                self.stdout.write(f"  {key}: residual {residual}")
            raise validation_error(e) from None
        except RailRiskError as e:
            raise usage_error(e) from None

        self.stdout.write('\n'.join(RiskReportService.render_anchor_lines(evaluate_anchors(model))))
        try:
            save_model(model, options['out'])
        except RailRiskError as e:
            raise usage_error(e) from None
        self.stdout.write(self.style.SUCCESS(f"Reference model written to {options['out']}"))
