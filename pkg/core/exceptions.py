"""
Exception hierarchy shared by every railrisk app
"""


class RailRiskError(Exception):
    """Base class for all domain errors raised by railrisk"""


# Factor algebra

class FactorError(RailRiskError):
    """Errors raised by factor construction and factor algebra"""


class ConstructionError(FactorError):
    """Invalid variable or factor definition"""


class ScopeConflictError(FactorError):
    """Two factors use the same variable name with different state lists"""


class UnknownVariableError(FactorError):
    """A variable was named that is not part of the factor scope"""


class EvidenceError(FactorError):
    """Evidence names an unknown variable or an illegal state"""


class DegenerateDistributionError(FactorError):
    """A table with zero total mass cannot be normalized"""


class ImpossibleEvidenceError(DegenerateDistributionError):
    """The evidence has zero probability under the model"""

    def __init__(self, evidence):
        self.evidence = dict(evidence)
        described = ', '.join(f"{name}={state}" for name, state in sorted(self.evidence.items())) or 'no evidence'
        super().__init__(f"Evidence has zero probability: {described}")


# Networks and risk queries

class NetworkError(RailRiskError):
    """Errors raised while building or querying Bayesian networks"""


class AcyclicityError(NetworkError):
    """The edge set contains a directed cycle"""

    def __init__(self, message, cycle=None):
        self.cycle = list(cycle or [])
        super().__init__(message)


class StructureError(NetworkError):
    """CPT scopes, vertices or edges do not match the expected structure"""


class CPTError(NetworkError):
    """A conditional probability table row does not sum to one"""


class UndefinedConditionalError(NetworkError):
    """A conditional cannot be estimated because its cell has no exposures"""

    def __init__(self, message, cell=None):
        self.cell = cell
        super().__init__(message)


class LegError(NetworkError):
    """Invalid trip legs"""


class RatioError(NetworkError):
    """A risk ratio has a zero denominator"""


class ShareError(NetworkError):
    """Invalid share vectors for the normalized percentage"""


# Ingestion

class IngestError(RailRiskError):
    """Errors raised while turning exposure records into counts"""


class BucketError(IngestError):
    """Invalid month or hour, or an invalid bucket mapping"""


class SectionError(IngestError):
    """Unknown line position or section label"""


class ParseError(IngestError):
    """Malformed exposure CSV input"""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ''
        super().__init__(f"{prefix}{message}")


class ScheduleError(IngestError):
    """Invalid train schedule or a record outside the schedule period"""


class InconsistencyError(IngestError):
    """Break counts exceed the exposures allocated to a cell"""

    def __init__(self, message, cell=None):
        self.cell = cell
        super().__init__(message)


# Synthetic reference data

class CalibrationError(RailRiskError):
    """The reference model misses one or more anchor tolerances"""

    def __init__(self, message, residuals=None):
        self.residuals = dict(residuals or {})
        super().__init__(message)


class SamplingError(RailRiskError):
    """Invalid sampling request"""


# Files and configuration

class ModelFileError(RailRiskError):
    """Unreadable, corrupted or unsupported model file"""


class ConfigError(RailRiskError):
    """Invalid or missing configuration file"""
