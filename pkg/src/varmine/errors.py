"""Exception hierarchy shared by all toolkit stages."""


class VarmineError(Exception):
    """Base class for all toolkit errors."""


# --- repository mining ---------------------------------------------------

class RepositoryNotFound(VarmineError):
    pass


class BranchNotFound(VarmineError):
    pass


class CorruptObject(VarmineError):
    """Git object store is damaged; carries the offending hash."""

    def __init__(self, object_hash: str, message: str = ""):
        self.object_hash = object_hash
        super().__init__(message or f"corrupt git object {object_hash}")


class EmptyIdentity(VarmineError):
    pass


class PathAbsentAtCommit(VarmineError):
    pass


class CommitNotFound(VarmineError):
    pass


# --- variability analysis -------------------------------------------------

class EmptyProject(VarmineError):
    pass


# --- attribution ------------------------------------------------------------

class SnapshotUnavailable(VarmineError):
    pass


class InconsistentStreams(VarmineError):
    pass


# --- expertise --------------------------------------------------------------

class UnknownPath(VarmineError):
    pass


# --- statistics -------------------------------------------------------------

class StatsError(VarmineError):
    pass


class AllZero(StatsError):
    pass


class TooFewSamples(StatsError):
    pass


class SampleSizeOutOfRange(StatsError):
    pass


class LengthMismatch(StatsError):
    pass


class DegenerateX(StatsError):
    pass


class EmptyCorpus(StatsError):
    pass


# --- reporting --------------------------------------------------------------

class IoFailure(VarmineError):
    pass


class ConfigError(VarmineError):
    pass
