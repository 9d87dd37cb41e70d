"""
Django management command to generate a synthetic exposure CSV from a model
"""
from pathlib import Path

from django.core.management.base import BaseCommand

from apps.ingest.exposures import write_exposures
from apps.risk.commandutils import add_model_argument, load_model_or_fail, usage_error
from apps.risk.config import load_config
from apps.synthgen.reference import REFERENCE_PERIOD
from apps.synthgen.sampler import sample_exposures
from core.exceptions import RailRiskError


class Command(BaseCommand):
    help = 'Sample a seeded synthetic exposure CSV from a rail-break model'

    def add_arguments(self, parser):
        parser.add_argument('--n', type=int, default=200000, help='Number of exposures to sample')
        parser.add_argument('--seed', type=int, default=7, help='Random seed')
        parser.add_argument('--out', required=True, help='Output CSV path')
        parser.add_argument('--force', action='store_true', help='Overwrite an existing output file')
        parser.add_argument('--config', help='Config file supplying the period and bucket maps')
        add_model_argument(parser)

    def handle(self, *args, **options):
        out = Path(options['out'])
        if out.exists() and not options['force']:
            raise usage_error(f"{out} already exists; pass --force to overwrite")

        model = load_model_or_fail(options['model'])
        period_start, period_end = REFERENCE_PERIOD
        maps = None
        try:
            if options['config']:
                config = load_config(options['config'])
                maps = config.maps
                period_start = config.period_start or period_start
                period_end = config.period_end or period_end
            records = sample_exposures(
                model, options['n'], options['seed'],
                period_start=period_start, period_end=period_end, maps=maps,
            )
            out.parent.mkdir(parents=True, exist_ok=True)
            with open(out, 'w', encoding='utf-8', newline='') as handle:
                write_exposures(records, handle)
        except RailRiskError as e:
            raise usage_error(e) from None
        except OSError as e:
            raise usage_error(f"Cannot write {out}: {e}") from None

        breaks = sum(1 for r in records if r.broke)
        self.stdout.write(self.style.SUCCESS(
            f"Wrote {len(records)} exposures ({breaks} breaks) to {out} "
            f"for {period_start:%Y-%m-%d} to {period_end:%Y-%m-%d}"
        ))
