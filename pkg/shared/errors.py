from dataclasses import dataclass
from typing import Dict, List, Optional


@dataclass
class ConfigIssue:
    severity: str  # 'error' or 'warning'
    message: str
    details: Dict = None


class SimulationError(Exception):
    """Base class for every failure raised by the simulator"""


class ConfigError(SimulationError):
    def __init__(self, issues: List[ConfigIssue]):
        self.issues = issues
        messages = '; '.join(issue.message for issue in issues if issue.severity == 'error')
        super().__init__(f"Invalid run configuration: {messages}")


class NumericalError(SimulationError):
    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        self.diagnostics = diagnostics or {}
        if self.diagnostics:
            message = f"{message} ({', '.join(f'{k}={v}' for k, v in self.diagnostics.items())})"
        super().__init__(message)


class GroundStateConvergenceError(NumericalError):
    pass


class PropagationInstabilityError(NumericalError):
    pass


class RootFindingError(NumericalError):
    pass


class InsufficientFringesError(SimulationError, ValueError):
    def __init__(self, message: str = "insufficient fringes"):
        super().__init__(message)


class ScanAlreadyNormalizedError(SimulationError, ValueError):
    pass


class SpectrumFormatError(SimulationError):
    def __init__(self, path: str, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")
