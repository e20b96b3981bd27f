class SidecarError(Exception):
    """Base class for everything this package raises on purpose."""


class ModelLoadError(SidecarError):
    """The model identifier names no known family or loadable checkpoint."""


class DeviceError(SidecarError):
    """The requested device is not usable in this build."""


class BadRecord(SidecarError):
    """An input file line that cannot be used."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")
