"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid arguments or configuration. CLI exit code 2."""


class CapacityError(RuntimeError):
    """A configured size cap would be exceeded. CLI exit code 3.

    The message always names the limit that was hit.
    """


class SearchOverflowError(RuntimeError):
    """Candidate enumeration exceeded the search cap.

    Decoders catch this and record a SearchOverflow decode status; it is
    never a process-level failure.
    """
