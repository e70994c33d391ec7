class EnnError(Exception):
    """Base class for every error raised by the ENN engine"""


class InvalidQueryError(EnnError):
    pass


class GeneralPositionError(EnnError):
    """Two input points share an x or a y coordinate"""

    def __init__(self, axis, first, second):
        self.axis = axis
        self.pair = (first, second)
        super().__init__(
            f"General position violated: points {first} and {second} share the same {axis}-coordinate"
        )


class IndexStateError(EnnError):
    pass


class SkylineStateError(IndexStateError):
    pass


class GenerationError(EnnError):
    pass


class InstanceFormatError(EnnError):
    pass


class ConfigurationError(EnnError):
    pass


class SnapshotError(EnnError):
    pass


class SnapshotVersionError(SnapshotError):
    pass


class SnapshotChecksumError(SnapshotError):
    pass
