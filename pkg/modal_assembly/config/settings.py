"""Control the per-user settings of the application.

The settings live in ``~/.modasm/config.toml`` and only hold preferences
that never change a result: worker count, CSV float format and log level.
"""

from typing import Literal, Optional

from simple_toml_settings import TOMLSettings

DEFAULT_FLOAT_FORMAT = "%.10g"

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]


class Settings(TOMLSettings):
    """The main settings class."""

    default_workers: int = 1
    float_format: str = DEFAULT_FLOAT_FORMAT
    log_level: LogLevel = "WARNING"

    def workers(self, requested: Optional[int] = None) -> int:
        """Resolve the worker count: an explicit request wins."""
        if requested is not None:
            return requested
        return max(1, int(self.default_workers))

    def csv_float_format(self) -> str:
        """Return the float format, or the default if it is unusable."""
        try:
            _ = self.float_format % 1.0
        except (TypeError, ValueError):
            return DEFAULT_FLOAT_FORMAT
        return self.float_format
