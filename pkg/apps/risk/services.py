"""
Report and validation services shared by the management commands and the API
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from apps.factors.factor import (
    DISTRIBUTION_TOL, IDENTITY_TOL, Factor, marginalize_to, normalize, reduce,
)
from apps.factors.inference import bayes_posterior, check_independence, evidence_mass
from apps.networks.railbreak import (
    CAUSES, LOCATION, SEASON, TIME_OF_DAY, JointRailBreakModel, RailBreakModel,
    RiskModel, state_alias,
)
from apps.networks.risk import Leg, normalized_percentage, posterior, query_risk, risk_ratio, trip_risk
from apps.synthgen.reference import FAIL, PASS, AnchorResult, evaluate_anchors
from core.exceptions import RailRiskError
from railrisk import __version__

logger = logging.getLogger(__name__)


def format_probability(value: Optional[float]) -> str:
    """Four significant digits"""
    if value is None:
        return 'n/a'
    return f"{value:.4g}"


@dataclass
class InvariantCheck:
    name: str
    passed: bool
    detail: str = ''

    def to_dict(self) -> dict:
        return {'name': self.name, 'status': PASS if self.passed else FAIL, 'detail': self.detail}


@dataclass
class ValidationResult:
    anchors: List[AnchorResult] = field(default_factory=list)
    invariants: List[InvariantCheck] = field(default_factory=list)

    @property
    def failures(self) -> List[str]:
        return (
            [r.anchor.key for r in self.anchors if r.status == FAIL]
            + [c.name for c in self.invariants if not c.passed]
        )

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            'passed': self.passed,
            'failures': self.failures,
            'anchors': [r.to_dict() for r in self.anchors],
            'invariants': [c.to_dict() for c in self.invariants],
        }


class RiskReportService:
    """Scenario reports and model validation"""

    @staticmethod
    def scenario_grid(model: RiskModel) -> List[dict]:
        """p(R=r1 | s, t, l) for all 24 cause combinations"""
        rows = []
        for season in SEASON.states:
            for time in TIME_OF_DAY.states:
                for location in LOCATION.states:
                    evidence = {'S': season, 'T': time, 'L': location}
                    try:
                        risk = query_risk(model, evidence)
                    except RailRiskError as e:
                        logger.warning(f"Scenario {evidence} has no defined risk: {e}")
                        risk = None
                    rows.append({
                        'season': season,
                        'season_label': state_alias('S', season),
                        'time': time,
                        'time_label': state_alias('T', time),
                        'location': location,
                        'location_label': state_alias('L', location),
                        'risk': risk,
                    })
        return rows

    @staticmethod
    def time_of_day_rows(model: RiskModel) -> List[dict]:
        """
        Break share, share of the day and normalized share for each time bucket.

        Args:
            model: Any fitted or reference risk model

        Returns:
            One row per time bucket. The normalized share divides each bucket's
            share of breaks by its share of the day and rescales to sum to 1; it
            is None for every row when a bucket saw no breaks.
        """
        breaks = posterior(model, 'T', {'R': 'r1'}).values
        day = normalize(marginalize_to(model.joint(), ['T'])).values
        try:
            normalized = normalized_percentage(breaks, day)
        except RailRiskError as e:
            logger.warning(f"Normalized time-of-day shares undefined: {e}")
            normalized = [None] * len(TIME_OF_DAY.states)
        return [
            {
                'time': state,
                'time_label': state_alias('T', state),
                'break_share': float(breaks[i]),
                'day_share': float(day[i]),
                'normalized_share': normalized[i],
            }
            for i, state in enumerate(TIME_OF_DAY.states)
        ]

    @staticmethod
    def summary_rows(model: RiskModel) -> dict:
        overall = query_risk(model)
        per_section = {}
        for location in LOCATION.states:
            try:
                per_section[state_alias('L', location)] = query_risk(model, {'L': location})
            except RailRiskError:
                per_section[state_alias('L', location)] = None

        try:
            ratio = risk_ratio(model, {'L': 'l2'}, {'L': 'l0'})
        except RailRiskError as e:
            logger.warning(f"Inland/coastal ratio undefined: {e}")
            ratio = None

        trip_sum = trip_risk(model, [Leg(location) for location in LOCATION.states])
        attribution = {}
        for variable in CAUSES:
            table = posterior(model, variable.name, {'R': 'r1'})
            attribution[variable.name] = {
                state_alias(variable.name, state): table.value({variable.name: state})
                for state in variable.states
            }

        return {
            'overall_risk': overall,
            'section_risk': per_section,
            'inland_coastal_ratio': ratio,
            'trip_sum': trip_sum,
            'trip_sum_residual': trip_sum - overall,
            'break_attribution': attribution,
            'time_of_day': RiskReportService.time_of_day_rows(model),
        }

    @staticmethod
    def build_report(model: RiskModel) -> dict:
        return {
            'tool_version': __version__,
            'kind': model.kind,
            'provenance': model.provenance,
            'scenarios': RiskReportService.scenario_grid(model),
            'summary': RiskReportService.summary_rows(model),
            'anchors': [r.to_dict() for r in evaluate_anchors(model)],
        }

    @staticmethod
    def _bayes_consistency(joint: Factor) -> float:
        """Largest gap between reduce-then-normalize and Bayes' rule for p(T | R=r1)"""
        time_break = marginalize_to(joint, ['T', 'R'])
        direct = normalize(reduce(time_break, {'R': 'r1'}))
        prior = marginalize_to(joint, ['T'])
        numerator = reduce(time_break, {'R': 'r1'}).values
        likelihood = np.divide(numerator, prior.values, out=np.zeros_like(numerator), where=prior.values > 0)
        marginal = evidence_mass([joint], {'R': 'r1'})
        via_bayes = bayes_posterior(Factor(prior.scope, likelihood), prior, marginal)
        return float(np.max(np.abs(direct.values - via_bayes.values)))

    @staticmethod
    def check_invariants(model: RiskModel) -> List[InvariantCheck]:
        checks = []
        joint = model.joint()

        if isinstance(model, RailBreakModel):
            bad = [v for v in model.net.dag.vertices if not model.net.cpt(v).is_cpt(v)]
            checks.append(InvariantCheck('cpt_rows_normalized', not bad,
                                         f"unnormalized: {', '.join(bad)}" if bad else ''))
        elif isinstance(model, JointRailBreakModel):
            checks.append(InvariantCheck('cpt_rows_normalized', model.table.is_distribution(),
                                         f"joint sums to {model.table.total():.12g}"))

        total = joint.total()
        checks.append(InvariantCheck('chain_rule_joint', abs(total - 1.0) <= DISTRIBUTION_TOL,
                                     f"joint sums to {total:.12g}"))

        overall = query_risk(model)
        direct = marginalize_to(joint, ['R']).value({'R': 'r1'})
        checks.append(InvariantCheck('query_consistency', abs(overall - direct) <= IDENTITY_TOL,
                                     f"difference {overall - direct:.3g}"))

        try:
            gap = RiskReportService._bayes_consistency(joint)
            checks.append(InvariantCheck('bayes_consistency', gap <= DISTRIBUTION_TOL, f"max gap {gap:.3g}"))
        except RailRiskError as e:
            checks.append(InvariantCheck('bayes_consistency', False, str(e)))

        if isinstance(model, RailBreakModel):
            pairs = [('S', 'T'), ('S', 'L'), ('T', 'L')]
            dependent = [f"{x},{y}" for x, y in pairs if not check_independence(joint, x, y)]
            checks.append(InvariantCheck('cause_independence', not dependent,
                                         f"dependent pairs: {'; '.join(dependent)}" if dependent else ''))

        trip_sum = trip_risk(model, [Leg(location) for location in LOCATION.states])
        checks.append(InvariantCheck('trip_sum_identity', abs(trip_sum - overall) <= DISTRIBUTION_TOL,
                                     f"difference {trip_sum - overall:.3g}"))
        return checks

    @staticmethod
    def validate(model: RiskModel) -> ValidationResult:
        result = ValidationResult(
            anchors=evaluate_anchors(model),
            invariants=RiskReportService.check_invariants(model),
        )
        if result.passed:
            logger.info('Model passed every anchor and invariant check')
        else:
            logger.warning(f"Model failed checks: {', '.join(result.failures)}")
        return result

    @staticmethod
    def render_anchor_lines(results: List[AnchorResult]) -> List[str]:
        lines = []
        for r in results:
            residual = '' if r.residual is None else f" residual {r.residual:+.4g}"
            lines.append(
                f"  [{r.status}] {r.anchor.key}: {format_probability(r.value)} "
                f"(target {r.anchor.target:g} +/- {r.anchor.tolerance:g}){residual}"
                + (f" {r.error}" if r.error else '')
            )
        return lines

    @staticmethod
    def render_report(report: dict) -> str:
        lines = [f"Rail-break risk report ({report['kind']} model)", '', 'Scenario risk p(break | season, time, location):']
        lines.append(f"  {'season':<13}{'time':<13}{'location':<14}risk")
        for row in report['scenarios']:
            lines.append(
                f"  {row['season_label']:<13}{row['time_label']:<13}{row['location_label']:<14}"
                f"{format_probability(row['risk'])}"
            )

        summary = report['summary']
        lines += ['', 'Summary:', f"  overall risk: {format_probability(summary['overall_risk'])}"]
        for section, risk in summary['section_risk'].items():
            lines.append(f"  {section} risk: {format_probability(risk)}")
        ratio = summary['inland_coastal_ratio']
        lines.append(f"  inland/coastal ratio: {'n/a' if ratio is None else f'{ratio:.4g}'}")
        lines.append(
            f"  trip sum over all sections: {format_probability(summary['trip_sum'])} "
            f"(difference to overall {summary['trip_sum_residual']:.3g})"
        )
        for variable, shares in summary['break_attribution'].items():
            described = ', '.join(f"{state} {format_probability(p)}" for state, p in shares.items())
            lines.append(f"  breaks by {variable}: {described}")
        lines.append(f"  {'time of day':<13}{'breaks':<10}{'of day':<10}normalized")
        for row in summary['time_of_day']:
            lines.append(
                f"  {row['time_label']:<13}{format_probability(row['break_share']):<10}"
                f"{format_probability(row['day_share']):<10}{format_probability(row['normalized_share'])}"
            )

        lines += ['', 'Anchors:']
        for row in report['anchors']:
            residual = '' if row['residual'] is None else f" residual {row['residual']:+.4g}"
            lines.append(
                f"  [{row['status']}] {row['key']}: {format_probability(row['value'])} "
                f"(target {row['target']:g} +/- {row['tolerance']:g}){residual}"
            )
        return '\n'.join(lines)

    @staticmethod
    def render_validation(result: ValidationResult) -> str:
        lines = ['Anchors:'] + RiskReportService.render_anchor_lines(result.anchors) + ['', 'Invariants:']
        for check in result.invariants:
            status = PASS if check.passed else FAIL
            lines.append(f"  [{status}] {check.name}" + (f": {check.detail}" if check.detail else ''))
        return '\n'.join(lines)
