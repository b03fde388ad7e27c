class DataError(ValueError):
    """Input data violates a schema or an invariant."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ValidationError(ValueError):
    """A validation run cannot produce a defined result (e.g. an empty class)."""
