"""Common error base for all platform services.

Every service error carries a stable string ``code`` so the API layer can
map failures to HTTP statuses and the CLI can print something greppable.
"""


class DlaasError(Exception):
    """Base class; ``code`` is a stable machine-readable identifier."""

    code = "INTERNAL"

    def __init__(self, message: str = "", *, code: str | None = None):
        super().__init__(message or self.__class__.code)
        if code is not None:
            self.code = code

    def __str__(self) -> str:
        base = super().__str__()
        return f"{self.code}: {base}" if base != self.code else self.code
