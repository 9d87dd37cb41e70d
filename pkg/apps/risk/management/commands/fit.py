"""
Django management command to fit a rail-break model from an exposure CSV
"""
from pathlib import Path

from django.core.management.base import BaseCommand

from apps.ingest.counts import build_counts
from apps.ingest.exposures import parse_exposures
from apps.networks.railbreak import JointRailBreakModel, fit_factorized, fit_full_joint
from apps.networks.risk import query_risk
from apps.risk.commandutils import usage_error
from apps.risk.config import load_config
from apps.risk.modelfile import save_model
from apps.risk.services import format_probability
from core.exceptions import RailRiskError, UndefinedConditionalError


class Command(BaseCommand):
    help = 'Fit a factorized or full-joint rail-break model from exposure records'

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='in_csv', required=True, help='Exposure CSV')
        parser.add_argument('--config', help='Config file (defaults to config/railrisk.env)')
        parser.add_argument('--mode', choices=['factorized', 'full_joint'], help='Overrides FIT_MODE')
        parser.add_argument('--alpha', type=float, help='Overrides ALPHA')
        parser.add_argument('--out', required=True, help='Model file to write')

    def handle(self, *args, **options):
        source = Path(options['in_csv'])
        try:
            config = load_config(options['config'])
            mode = options['mode'] or config.fit_mode
            alpha = config.alpha if options['alpha'] is None else options['alpha']
            if alpha < 0:
                raise usage_error(f"--alpha must be >= 0, got {alpha}")

            try:
                with open(source, 'rb') as handle:
                    records = parse_exposures(handle)
            except OSError as e:
                raise usage_error(f"Cannot read {source}: {e}") from None
            if not records:
                raise usage_error(f"no exposures in {source}")

            schedule = config.schedule(records)
            counts = build_counts(records, schedule, config.maps)
            provenance = {
                **config.provenance(),
                'data_source': str(source),
                'fit_mode': mode,
                'alpha': alpha,
                'schedule': schedule.to_dict(),
                'exposures': counts.total,
                'breaks': int(counts.breaks.sum()),
            }
            if mode == 'full_joint':
                model = JointRailBreakModel(fit_full_joint(counts, alpha), provenance)
            else:
                model = fit_factorized(counts, alpha, provenance)
            save_model(model, options['out'])
            overall = query_risk(model)
        except UndefinedConditionalError as e:
            raise usage_error(f"Degenerate cell: {e}; use a positive alpha") from None
        except RailRiskError as e:
            raise usage_error(e) from None

        self.stdout.write(f"Fitted {mode} model from {counts.total} exposures ({provenance['breaks']} breaks)")
        self.stdout.write(self.style.SUCCESS(
            f"p(R=r1) = {format_probability(overall)}; model written to {options['out']}"
        ))
