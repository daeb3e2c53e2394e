"""Neural-network emulator toolkit for a modal aerosol microphysics step."""

__version__ = "0.1.0"

from .schema import builtin_schema, validate_columns  # noqa: F401
