"""Exception hierarchy for the saneval pipeline."""


class SanevalError(Exception):
    """Base class for all saneval errors."""


class ConfigError(SanevalError):
    """Invalid run configuration."""


class BackendUnavailable(SanevalError):
    """Live backend call failed after all retries."""


class CassetteMiss(SanevalError):
    """Replay-mode lookup for a request that was never recorded."""


class CassetteConflict(SanevalError):
    """Re-recording an existing digest with a different payload."""


class BadImage(SanevalError):
    """Image handle does not resolve to a decodable image."""


class BadBBox(SanevalError):
    """Degenerate or out-of-bounds bounding box."""


class ProtocolError(SanevalError):
    """Malformed reply from the detector sidecar."""


class ParseFailure(SanevalError):
    """Backend reply does not match the requested structure, even after a re-ask."""


class InconsistentParse(SanevalError):
    """Contradictory values inside a parsed prompt (e.g. conflicting counts)."""


class UnsupportedRelation(SanevalError):
    """Spatial relation outside the configured relation set."""


class ManifestError(SanevalError):
    """Dataset manifest violates the record schema."""


class UndefinedCorrelation(SanevalError):
    """Correlation requested on a constant or too-short vector."""
