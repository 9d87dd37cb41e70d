"""
Risk queries against a fitted rail-break model
"""
import logging
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from apps.factors.factor import Factor
from apps.factors.inference import eliminate
from core.exceptions import EvidenceError, LegError, RatioError, ShareError
from .railbreak import RiskModel, describe_evidence, resolve_evidence, resolve_state, resolve_variable

logger = logging.getLogger(__name__)

SHARE_TOL = 1e-6


def _cause_evidence(evidence: Optional[Mapping[str, Any]]):
    resolved = resolve_evidence(evidence)
    if 'R' in resolved:
        raise EvidenceError('Risk queries condition on Season, Time of day and Location only')
    return resolved


def query_risk(model: RiskModel, evidence: Optional[Mapping[str, Any]] = None) -> float:
    """p(R=r1 | evidence) for evidence over any subset of S, T, L"""
    resolved = _cause_evidence(evidence)
    result = eliminate(model.factors, ['R'], resolved)
    return result.value({'R': 'r1'})


def posterior(model: RiskModel, variable: str, evidence: Optional[Mapping[str, Any]] = None) -> Factor:
    """
    Posterior of a single variable, e.g. p(T | R=r1) for the share of breaks
    that happen in the morning
    """
    return eliminate(model.factors, [resolve_variable(variable)], resolve_evidence(evidence))


@dataclass(frozen=True)
class Leg:
    """One section of a trip; unset time or season is marginalized at the model's own mix"""
    section: str
    time: Optional[str] = None
    season: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'section', resolve_state('L', self.section))
        if self.time is not None:
            object.__setattr__(self, 'time', resolve_state('T', self.time))
        if self.season is not None:
            object.__setattr__(self, 'season', resolve_state('S', self.season))

    @property
    def evidence(self):
        return {k: v for k, v in (('T', self.time), ('S', self.season)) if v is not None}


def leg_contribution(model: RiskModel, leg: Leg) -> float:
    """p(R=r1, L=section | T, S) for one leg"""
    table = eliminate(model.factors, ['L', 'R'], leg.evidence)
    return table.value({'L': leg.section, 'R': 'r1'})


def trip_risk(model: RiskModel, legs: Sequence[Leg], complement: bool = False) -> float:
    """
    Break risk of a trip over distinct line sections

    Args:
        model: Factorized or full-joint risk model
        legs: Leg instances or (section, time, season) tuples; time and season
            may be None to sum them out
        complement: Combine the legs as 1 - prod(1 - c) instead of summing

    Returns:
        Sum of the per-leg joint contributions p(R=r1, L=section | T, S)

    Raises:
        LegError: No legs, or the same section in more than one leg
    """
    legs = [leg if isinstance(leg, Leg) else Leg(*leg) for leg in legs]
    if not legs:
        raise LegError('A trip needs at least one leg')
    sections = [leg.section for leg in legs]
    duplicates = sorted({s for s in sections if sections.count(s) > 1})
    if duplicates:
        raise LegError(f"Each section may appear in one leg only; repeated: {', '.join(duplicates)}")

    contributions = np.array([leg_contribution(model, leg) for leg in legs])
    if complement:
        return float(1.0 - np.prod(1.0 - contributions))
    return float(contributions.sum())


def risk_ratio(model: RiskModel, evidence_a: Optional[Mapping[str, Any]],
               evidence_b: Optional[Mapping[str, Any]]) -> float:
    numerator = query_risk(model, evidence_a)
    denominator = query_risk(model, evidence_b)
    if denominator == 0:
        raise RatioError(f"Risk is zero for {describe_evidence(_cause_evidence(evidence_b))}")
    return numerator / denominator


def normalized_percentage(break_share: Sequence[float], duration_share: Sequence[float]) -> list:
    """
    Break share per bucket relative to the bucket's share of time, normalized.
    ([0.56, 0.44], [0.29, 0.71]) gives roughly [0.757, 0.243].
    """
    breaks = np.asarray(break_share, dtype=float)
    durations = np.asarray(duration_share, dtype=float)
    if breaks.ndim != 1 or breaks.shape != durations.shape or breaks.size == 0:
        raise ShareError('Break and duration shares must be nonempty lists of the same length')
    if np.any(durations <= 0):
        raise ShareError('Duration shares must be positive; a zero share cannot be divided by')
    if np.any(breaks <= 0):
        raise ShareError('Break shares must be positive')
    for label, shares in (('Break', breaks), ('Duration', durations)):
        if abs(shares.sum() - 1.0) > SHARE_TOL:
            raise ShareError(f"{label} shares sum to {shares.sum():.9g}, expected 1")
    enrichment = breaks / durations
    return [float(v) for v in enrichment / enrichment.sum()]
