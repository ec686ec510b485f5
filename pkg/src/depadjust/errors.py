"""Exception type shared by all estimators."""


class EstimationError(ValueError):
    """Raised when an estimator or null model cannot be evaluated.

    ``code`` is a short stable identifier (e.g. ``"sample-too-small"``)
    that the CLI maps to exit statuses.
    """

    def __init__(self, code, message=None):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)
