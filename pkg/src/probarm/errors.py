"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
TransportError -> 3.
"""


class ConfigError(ValueError):
    """Invalid configuration: out-of-range threshold, unknown backend, bad flag."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class IngestError(DataError):
    """Malformed input table (ragged rows, empty file, unparsable cells)."""


class TransportError(RuntimeError):
    """External model server failed, died, or violated the wire protocol."""
