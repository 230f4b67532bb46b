"""
Shared error types for the wind-gravity library

Every failure the library reports derives from WindGravError, which carries the
process exit code the command-line layer should use and a detail payload for diagnostics.
"""

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOFT = 4


class WindGravError(Exception):
    """Base exception for library and command failures"""

    exit_code: int = EXIT_FAILURE

    def __init__(self, message: str, detail: Optional[Dict[str, Any]] = None):
        self.message = message
        self.detail = detail or {}
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a serializable diagnostic record"""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exitCode": self.exit_code,
            **({"detail": self.detail} if self.detail else {}),
        }


class DomainError(WindGravError, ValueError):
    """Argument outside the mathematical domain of a function"""


class BasisIndexError(WindGravError, IndexError):
    """Basis index outside the tabulated range"""


class ParameterError(WindGravError, ValueError):
    """Invalid physical or decay parameter"""

    exit_code = EXIT_CONFIG


class ZeroSearchError(WindGravError):
    """A Bessel-zero bracket without a sign change"""


class DegenerateModeError(WindGravError):
    """A Helmholtz denominator vanishes for a retained basis index"""


class DataFileError(WindGravError):
    """Malformed or inconsistent input data file"""

    exit_code = EXIT_DATA

    def __init__(self, path: Any, message: str, line: Optional[int] = None):
        location = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(
            f"{location}: {message}", {"path": str(path), "line": line}
        )
        self.path = path
        self.line = line


class ConfigError(WindGravError):
    """Invalid run configuration"""

    exit_code = EXIT_CONFIG
