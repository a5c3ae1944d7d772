"""Exception hierarchy shared across nodalkit."""


class NodalKitError(Exception):
    """Base class for all nodalkit errors."""


class NonSymmetricMatrixError(NodalKitError, ValueError):
    def __init__(self, i, j, a, b):
        self.i, self.j = i, j
        super().__init__(
            f"matrix is not symmetric: M[{i},{j}]={a!r} but M[{j},{i}]={b!r}"
        )


class ReducibleMatrixError(NodalKitError, ValueError):
    def __init__(self, components):
        self.components = components
        super().__init__(
            f"matrix is reducible; its graph has {len(components)} components"
        )


class VanishingVectorError(NodalKitError, ValueError):
    """Raised when N(x) is requested for a vector with zero entries.

    N is only defined for non-vanishing vectors; use
    :func:`nodalkit.nodal.support_nodal_count` or a signing from
    :mod:`nodalkit.basis_construction` instead.
    """

    def __init__(self, zeros):
        self.zeros = list(zeros)
        super().__init__(
            f"vector vanishes on {self.zeros}; N is undefined. Use support_nodal_count "
            "(N^s) or construct a signing."
        )


class ExactCapExceeded(NodalKitError, ValueError):
    def __init__(self, what, n, cap, alternative):
        super().__init__(
            f"{what}: size {n} exceeds exact cap {cap}; use {alternative} instead"
        )


class ConstructionError(NodalKitError, RuntimeError):
    """Internal consistency failure inside a basis construction."""


class ParseError(NodalKitError, ValueError):
    def __init__(self, path, line, message):
        self.path, self.line = path, line
        super().__init__(f"{path}:{line}: {message}")
