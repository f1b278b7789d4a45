"""Exception hierarchy shared by every module in the package."""


class R3CError(Exception):
    """Base class for all package errors."""


class DataError(R3CError):
    """Raised for problems with input data (files, images, manifests)."""


class MalformedHeader(DataError):
    pass


class UnsupportedDepth(DataError):
    pass


class UnsupportedColor(DataError):
    pass


class IoFailure(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ImageTooSmall(DataError):
    pass


class EmptyImage(DataError):
    pass
