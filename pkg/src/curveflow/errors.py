"""Exception hierarchy shared by every curveflow module."""


class CurveflowError(Exception):
    """Base class for all errors raised by curveflow."""


class DegenerateGrid(CurveflowError):
    """The length element |f_x| collapsed to (near) zero somewhere on the grid."""

    def __init__(self, min_fx, eps_reg):
        self.min_fx = float(min_fx)
        self.eps_reg = float(eps_reg)
        super().__init__(f"degenerate grid: min |f_x| = {self.min_fx:.3e} <= eps_reg = {self.eps_reg:.3e}")


class NonFinite(CurveflowError):
    """A node coordinate or derived quantity became NaN or infinite."""


class ConfigError(CurveflowError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}" if path else reason)


class IoError(CurveflowError):
    """Reading or writing an output file failed."""

    def __init__(self, path, reason):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")
