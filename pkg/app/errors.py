"""
Exception hierarchy shared by the engines, the CLI and the HTTP API.
Every error carries a machine-readable code and a context dict.
"""

from typing import Any, Dict, List, Optional


class RfssError(Exception):
    """Base class for analysis errors."""

    code = "rfss_error"

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "context": self.context}


class InvalidParamsError(RfssError, ValueError):
    code = "invalid_params"


class InvalidNetlistError(RfssError):
    code = "invalid_netlist"

    def __init__(self, message: str, diagnostics: Optional[List[Any]] = None,
                 context: Optional[Dict[str, Any]] = None):
        self.diagnostics = list(diagnostics or [])
        ctx = dict(context or {})
        ctx.setdefault("diagnostics", [
            d.model_dump() if hasattr(d, "model_dump") else d for d in self.diagnostics
        ])
        super().__init__(message, ctx)


class SingularSystemError(RfssError):
    code = "singular_system"

    def __init__(self, message: str, offending: Optional[List[str]] = None,
                 context: Optional[Dict[str, Any]] = None):
        self.offending = sorted(offending or [])
        ctx = dict(context or {})
        ctx.setdefault("offending", self.offending)
        super().__init__(message, ctx)


class PortCountError(RfssError):
    code = "port_count"


class NoiseAnalysisError(RfssError):
    code = "noise_analysis"


class MatchingError(RfssError):
    code = "no_match_solution"


class TouchstoneError(RfssError):
    code = "touchstone"


class SweepError(RfssError):
    code = "sweep"


class InvalidJsonError(RfssError):
    code = "invalid_json"
