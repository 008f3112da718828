"""Exception types shared across the package."""


class DataFormatError(Exception):
    """Malformed or inconsistent on-disk data (bad magic, header, shapes)."""


class DegenerateDataError(Exception):
    """Inversion impossible: every harmonic denominator vanishes identically."""
