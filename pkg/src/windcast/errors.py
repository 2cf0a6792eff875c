"""Exception hierarchy shared by every windcast module.

Each exception carries a short machine-readable ``code`` so the command line
front end can emit structured error JSON.
"""


class WindcastError(Exception):
    code = "windcast_error"


class SeriesError(WindcastError):
    code = "series_error"


class MalformedRow(SeriesError):
    code = "malformed_row"


class NonUniformSpacing(SeriesError):
    code = "non_uniform_spacing"


class NegativeSpeed(SeriesError):
    code = "negative_speed"


class GapTooLong(SeriesError):
    code = "gap_too_long"


class EmptyPartition(SeriesError):
    code = "empty_partition"


class ConstantSeries(SeriesError):
    code = "constant_series"


class SeriesTooShort(SeriesError):
    code = "series_too_short"


class PolyfitError(WindcastError):
    code = "polyfit_error"


class RankDeficient(PolyfitError):
    code = "rank_deficient"


class DegreeTooLarge(PolyfitError):
    code = "degree_too_large"


class ArmaError(WindcastError):
    code = "arma_error"


class SingularRegression(ArmaError):
    code = "singular_regression"


class NonStationary(ArmaError):
    code = "non_stationary"


class InsufficientHistory(WindcastError):
    code = "insufficient_history"


class NetworkError(WindcastError):
    code = "network_error"


class SizeMismatch(NetworkError):
    code = "size_mismatch"


class TrainingDiverged(NetworkError):
    code = "training_diverged"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EvaluationError(WindcastError):
    code = "evaluation_error"


class LengthMismatch(EvaluationError):
    code = "length_mismatch"


class UndefinedCorrelation(EvaluationError):
    code = "undefined_correlation"


class ConfigError(WindcastError):
    code = "config_error"


class SchemaError(WindcastError):
    code = "schema_error"
