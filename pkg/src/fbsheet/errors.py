"""Exception types shared across the package."""


class FbsheetError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedOrderError(FbsheetError):
    """Requested wavelet order is outside the supported range."""


class InsufficientDataError(FbsheetError):
    """Signal or field is too short for the requested octave."""


class InvalidRangeError(FbsheetError):
    """An octave range or box is empty or inconsistent."""


class EmbeddingError(FbsheetError):
    """Circulant embedding produced eigenvalues below tolerance."""


class RankDeficiencyError(FbsheetError):
    """Regression design matrix does not have full column rank."""


class WeightMatrixError(FbsheetError):
    """Weight matrix is not symmetric positive definite."""


class SingularSystemError(FbsheetError):
    """Normal equations of the regression are singular."""


class ModelDegenerateError(FbsheetError):
    """Model covariance could not be repaired to positive definite."""


class FieldFormatError(FbsheetError):
    """Base class for field-file parsing errors."""


class MagicMismatchError(FieldFormatError):
    """Field file does not start with the expected magic bytes."""


class TruncatedPayloadError(FieldFormatError):
    """Field file ends before the declared payload is complete."""


class DimensionOverflowError(FieldFormatError):
    """Field file declares an unreasonable number of axes or sizes."""


class ConfigError(FbsheetError):
    """Experiment configuration is invalid."""


class InsufficientReplicatesError(FbsheetError):
    """Too few replicates to compute summary statistics."""


class ExperimentError(FbsheetError):
    """Monte Carlo experiment aborted (too many failed replicates)."""
