class StreamFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class StreamQualityError(ValueError):
    pass


class AnnotationError(ValueError):
    pass


class MatchInputError(ValueError):
    pass


class StatisticUndefinedError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class InsufficientTestsError(ValueError):
    def __init__(self, message: str, available: int, required: int):
        self.available = available
        self.required = required
        super().__init__(f"{message}: {available} < {required}")


class BootstrapError(ValueError):
    def __init__(self, message: str, undefined_count: int, n_reps: int):
        self.undefined_count = undefined_count
        self.n_reps = n_reps
        super().__init__(f"{message}: {undefined_count} of {n_reps}")
