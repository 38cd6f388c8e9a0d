class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class FormatError(ValueError):
    """A raster file could not be parsed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset
