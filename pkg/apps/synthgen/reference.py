"""
Calibrated reference rail-break model

The reference model stands in for the unavailable operational break history.
Its parameters are fitted to the published risk anchors below: a closed-form
solve from the anchors gives a starting point, then a bounded least-squares
refinement against every active anchor polishes it.

Assumptions that the published numbers do not pin down:
  - every train traverses all three sections, so p(L) is uniform
  - p(S) follows season lengths in days over calendar year 2015
  - p(T) follows bucket lengths in hours (7 of 24 hours are morning)
  - break risk is separable per section: p(r1 | s, t, l) = m[l, s] * h[l, t]
    where the time profile h averages to 1 under p(T)
  - coastal morning risk is 1.5x coastal not-morning risk
  - coastal late summer 0.001 and late winter 0.0016
  - semi-coastal early summer 0.038, late summer 0.041, late winter 0.043; its
    winter level and time profile absorb the overall rate and the morning
    break share
"""
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Dict, List, Mapping, Optional

import numpy as np
from scipy.optimize import least_squares

from apps.ingest.buckets import BucketMaps
from apps.ingest.counts import ScheduleConfig, calendar_hours, season_days
from apps.networks.railbreak import RailBreakModel, RiskModel
from apps.networks.risk import posterior, query_risk, risk_ratio
from core.exceptions import CalibrationError, RailRiskError

logger = logging.getLogger(__name__)

FIXTURE_PATH = Path(__file__).resolve().parent / 'fixtures' / 'reference_model.json'

REFERENCE_PERIOD = (date(2015, 1, 1), date(2015, 12, 31))

PASS = 'PASS'
FAIL = 'FAIL'
WAIVED = 'WAIVED'


@dataclass(frozen=True)
class Anchor:
    """A published risk figure the reference model must reproduce"""
    key: str
    description: str
    kind: str  # risk, ratio or break_share
    evidence: Mapping[str, str]
    target: float
    tolerance: float
    reference: Mapping[str, str] = field(default_factory=dict)
    waived: bool = False


@dataclass(frozen=True)
class AnchorResult:
    anchor: Anchor
    value: Optional[float]
    status: str
    error: str = ''

    @property
    def residual(self) -> Optional[float]:
        return None if self.value is None else self.value - self.anchor.target

    def to_dict(self) -> dict:
        return {
            'key': self.anchor.key,
            'description': self.anchor.description,
            'kind': self.anchor.kind,
            'evidence': dict(self.anchor.evidence),
            'target': self.anchor.target,
            'tolerance': self.anchor.tolerance,
            'value': self.value,
            'residual': self.residual,
            'status': self.status,
            'error': self.error,
        }


ANCHORS = [
    Anchor('overall', 'Overall risk per train and section', 'risk', {}, 0.019, 0.001),
    Anchor('inland_winter', 'Inland in winter', 'risk', {'L': 'l2', 'S': 's2'}, 0.024, 0.002),
    Anchor('inland_late_winter', 'Inland in late winter', 'risk', {'L': 'l2', 'S': 's3'}, 0.014, 0.002),
    Anchor('inland_early_summer', 'Inland in early summer', 'risk', {'L': 'l2', 'S': 's0'}, 0.003, 0.001),
    # Cannot hold together with the section ratio and the inland season levels.
    Anchor('coastal_not_morning', 'Coastal outside the morning', 'risk', {'L': 'l0', 'T': 't1'}, 0.007, 0.001,
           waived=True),
    Anchor('inland_morning', 'Inland in the morning', 'risk', {'L': 'l2', 'T': 't0'}, 0.030, 0.002),
    Anchor('inland_winter_morning', 'Inland winter morning', 'risk', {'L': 'l2', 'S': 's2', 'T': 't0'},
           0.054, 0.003),
    Anchor('coastal_not_morning_early_summer', 'Coastal early summer outside the morning', 'risk',
           {'L': 'l0', 'T': 't1', 'S': 's0'}, 0.0007, 0.0002),
    Anchor('inland_coastal_ratio', 'Inland over coastal risk', 'ratio', {'L': 'l2'}, 10.0, 1.5,
           reference={'L': 'l0'}),
    Anchor('morning_break_share', 'Share of breaks in the morning', 'break_share', {'T': 't0'}, 0.56, 0.02),
]

ANCHORS_BY_KEY = {anchor.key: anchor for anchor in ANCHORS}

COASTAL_MORNING_RATIO = 1.5
COASTAL_SEASON_RISK = {1: 0.001, 3: 0.0016}
SEMI_COASTAL_SEASON_RISK = {0: 0.038, 1: 0.041, 3: 0.043}


def anchor_value(model: RiskModel, anchor: Anchor) -> float:
    if anchor.kind == 'risk':
        return query_risk(model, anchor.evidence)
    if anchor.kind == 'ratio':
        return risk_ratio(model, anchor.evidence, anchor.reference)
    if anchor.kind == 'break_share':
        (name, state), = anchor.evidence.items()
        return posterior(model, name, {'R': 'r1'}).value({name: state})
    raise ValueError(f"Unknown anchor kind {anchor.kind}")


def evaluate_anchor(model: RiskModel, anchor: Anchor) -> AnchorResult:
    try:
        value = anchor_value(model, anchor)
    except RailRiskError as e:
        return AnchorResult(anchor, None, WAIVED if anchor.waived else FAIL, str(e))
    if anchor.waived:
        return AnchorResult(anchor, value, WAIVED)
    within = abs(value - anchor.target) <= anchor.tolerance
    return AnchorResult(anchor, value, PASS if within else FAIL)


def evaluate_anchors(model: RiskModel, anchors: Optional[List[Anchor]] = None) -> List[AnchorResult]:
    return [evaluate_anchor(model, anchor) for anchor in (anchors or ANCHORS)]


def reference_schedule() -> ScheduleConfig:
    return ScheduleConfig(1.0, *REFERENCE_PERIOD)


def reference_priors() -> Dict[str, np.ndarray]:
    """p(S) from season lengths, p(T) from bucket lengths and a uniform p(L)"""
    maps = BucketMaps.default()
    schedule = reference_schedule()
    days = season_days(schedule, maps)
    hours = calendar_hours(schedule, maps).sum(axis=0)
    return {
        'S': days / days.sum(),
        'T': hours / hours.sum(),
        'L': np.full(3, 1.0 / 3),
    }


def _closed_form(priors: Mapping[str, np.ndarray]) -> np.ndarray:
    """
    Starting parameters solved directly from the anchors.

    Layout: 12 season means m[l, s] (location-major) followed by the three
    morning factors h[l, t0].
    """
    ps, pt = priors['S'], priors['T']
    target = {key: anchor.target for key, anchor in ANCHORS_BY_KEY.items()}
    means = np.zeros((3, 4))

    inland_morning = target['inland_winter_morning'] / target['inland_winter']
    inland_mean = target['inland_morning'] / inland_morning
    means[2, 0] = target['inland_early_summer']
    means[2, 2] = target['inland_winter']
    means[2, 3] = target['inland_late_winter']
    means[2, 1] = (inland_mean - ps[0] * means[2, 0] - ps[2] * means[2, 2] - ps[3] * means[2, 3]) / ps[1]

    coastal_mean = inland_mean / target['inland_coastal_ratio']
    coastal_morning = COASTAL_MORNING_RATIO / (pt[0] * COASTAL_MORNING_RATIO + pt[1])
    coastal_rest = 1.0 / (pt[0] * COASTAL_MORNING_RATIO + pt[1])
    means[0, 0] = target['coastal_not_morning_early_summer'] / coastal_rest
    for s, risk in COASTAL_SEASON_RISK.items():
        means[0, s] = risk
    means[0, 2] = (coastal_mean - ps[0] * means[0, 0] - ps[1] * means[0, 1] - ps[3] * means[0, 3]) / ps[2]

    semi_mean = 3 * target['overall'] - inland_mean - coastal_mean
    # Morning mass of r1 summed over sections, from the break share.
    morning_sum = target['morning_break_share'] * target['overall'] * 3 / pt[0]
    semi_morning = (morning_sum - target['inland_morning'] - coastal_mean * coastal_morning) / semi_mean
    for s, risk in SEMI_COASTAL_SEASON_RISK.items():
        means[1, s] = risk
    means[1, 2] = (semi_mean - ps[0] * means[1, 0] - ps[1] * means[1, 1] - ps[3] * means[1, 3]) / ps[2]

    return np.concatenate([means.ravel(), [coastal_morning, semi_morning, inland_morning]])


def _break_table(theta: np.ndarray, pt: np.ndarray) -> np.ndarray:
    """p(r1 | s, t, l) as a 4x2x3 array"""
    means = theta[:12].reshape(3, 4)
    morning = theta[12:]
    rest = (1.0 - pt[0] * morning) / pt[1]
    profile = np.stack([morning, rest])  # (t, l)
    return means.T[:, np.newaxis, :] * profile[np.newaxis, :, :]


def _model_from_theta(theta: np.ndarray, priors: Mapping[str, np.ndarray],
                      provenance: Optional[Mapping] = None) -> RailBreakModel:
    risk = _break_table(theta, priors['T'])
    rail_break = np.stack([1.0 - risk, risk], axis=-1)
    return RailBreakModel.from_tables(priors['S'], priors['T'], priors['L'], rail_break, provenance)


def reference_provenance() -> dict:
    start, end = REFERENCE_PERIOD
    return {
        'data_source': 'synthetic reference calibration',
        'fit_mode': 'factorized',
        'alpha': None,
        'bucket_maps': BucketMaps.default().to_dict(),
        'period_start': start.isoformat(),
        'period_end': end.isoformat(),
        'waived_anchors': [a.key for a in ANCHORS if a.waived],
        'assumptions': [
            'uniform p(L): every train traverses all three sections',
            'p(S) proportional to season lengths in days over 2015',
            'p(T) proportional to bucket lengths in hours',
            f'coastal morning risk {COASTAL_MORNING_RATIO}x not-morning risk',
            'coastal late summer 0.001, late winter 0.0016',
            'semi-coastal early summer 0.038, late summer 0.041, late winter 0.043; '
            'winter level and time profile set by the overall rate and the morning break share',
        ],
    }


def calibrate_reference() -> RailBreakModel:
    """Fit the reference model to the anchors; raises CalibrationError listing residuals on failure"""
    priors = reference_priors()
    theta0 = _closed_form(priors)
    active = [a for a in ANCHORS if not a.waived]

    def residuals(theta):
        model = _model_from_theta(theta, priors)
        return np.array([(anchor_value(model, a) - a.target) / a.tolerance for a in active])

    pt0 = priors['T'][0]
    lower = np.concatenate([np.full(12, 1e-6), np.ones(3)])
    upper = np.concatenate([np.full(12, 0.5), np.full(3, (1.0 - 1e-6) / pt0)])
    if np.any(theta0 <= lower) or np.any(theta0 >= upper):
        raise CalibrationError('Closed-form starting point lies outside the parameter bounds',
                               residuals=dict(zip([a.key for a in active], residuals(theta0))))

    fit = least_squares(residuals, theta0, bounds=(lower, upper), method='trf', x_scale='jac')
    logger.info(f"Calibration refinement finished after {fit.nfev} evaluations: {fit.message}")

    model = _model_from_theta(fit.x, priors, reference_provenance())
    results = evaluate_anchors(model)
    failed = {r.anchor.key: r.residual for r in results if r.status == FAIL}
    if failed:
        raise CalibrationError(
            f"Reference model misses {len(failed)} anchor(s): {', '.join(sorted(failed))}",
            residuals={r.anchor.key: r.residual for r in results},
        )
    logger.info('Reference model satisfies every active anchor')
    return model


def load_reference() -> RailBreakModel:
    """The committed reference model fixture"""
    from apps.risk.modelfile import load_model

    return load_model(FIXTURE_PATH)
