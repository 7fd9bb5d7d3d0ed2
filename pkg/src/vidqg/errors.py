"""Domain errors shared across the package."""


class VidqgError(Exception):
    """Base class for every domain error raised by vidqg."""


class MalformedInputError(VidqgError):
    """An input file violates the documented schema.

    ``pointer`` is a JSON-pointer-style path to the offending field,
    e.g. ``/videos/2/questions/0/qtype``.
    """

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '<document>'}: {message}")
        self.pointer = pointer


class DuplicateIdError(VidqgError):
    def __init__(self, video_id: str):
        super().__init__(f"duplicate video id: {video_id!r}")
        self.video_id = video_id


class BadRatiosError(VidqgError):
    pass


class EmptyTextError(VidqgError):
    pass


class ProviderUnavailableError(VidqgError):
    pass


class UnsupportedGranularityError(VidqgError):
    pass


class DimMismatchError(VidqgError):
    pass


class NoReferencesError(VidqgError):
    pass


class MissingDomainError(VidqgError):
    def __init__(self, video_id: str):
        super().__init__(f"video {video_id!r} has no domain label")
        self.video_id = video_id


class EmptyPoolError(VidqgError):
    def __init__(self, domain: str):
        super().__init__(f"no pool videos available for domain {domain!r}")
        self.domain = domain


class BackendUnreachableError(VidqgError):
    pass


class DanglingScoreError(VidqgError):
    pass


class EmptyTableError(VidqgError):
    pass


class InsufficientDataError(VidqgError):
    pass


class UnresolvedItemsError(VidqgError):
    pass


class CorruptStoreError(VidqgError):
    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class BindFailureError(VidqgError):
    pass
