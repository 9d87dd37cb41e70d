"""
Django management command to query p(R=r1 | evidence)
"""
from django.core.management.base import BaseCommand

from apps.networks.railbreak import describe_evidence, resolve_evidence, state_alias
from apps.networks.risk import query_risk
from apps.risk.commandutils import add_model_argument, dump_json, load_model_or_fail, usage_error
from apps.risk.services import format_probability
from core.exceptions import RailRiskError
from railrisk import __version__


class Command(BaseCommand):
    help = 'Conditional rail-break risk for a season, time of day and location'

    def add_arguments(self, parser):
        add_model_argument(parser)
        parser.add_argument('--season', help='early_summer, late_summer, winter, late_winter (or s0..s3)')
        parser.add_argument('--time', help='morning or not_morning (or t0, t1)')
        parser.add_argument('--location', help='coastal, semi_coastal or inland (or l0..l2)')
        parser.add_argument('--json', action='store_true', help='Machine-readable output')

    def handle(self, *args, **options):
        model = load_model_or_fail(options['model'])
        try:
            evidence = resolve_evidence({
                'S': options['season'],
                'T': options['time'],
                'L': options['location'],
            })
            risk = query_risk(model, evidence)
        except RailRiskError as e:
            raise usage_error(e) from None

        if options['json']:
            self.stdout.write(dump_json({
                'tool_version': __version__,
                'kind': model.kind,
                'provenance': model.provenance,
                'evidence': evidence,
                'evidence_labels': {name: state_alias(name, code) for name, code in evidence.items()},
                'risk': risk,
            }))
            return
        self.stdout.write(f"p(R=r1 | {describe_evidence(evidence)}) = {format_probability(risk)}")
