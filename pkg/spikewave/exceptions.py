class GridMismatchError(ValueError):
    """Two sampled objects do not share dt, start time and length."""


class NumericalError(ArithmeticError):
    """A computation cannot produce a trustworthy result."""


class UnderResolvedError(NumericalError):
    pass


class DegenerateKernelError(NumericalError):
    pass


class AdmissibilityError(NumericalError):
    pass
