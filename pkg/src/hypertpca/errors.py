"""Exception hierarchy shared by every module."""


class HyperTPCAError(Exception):
    pass


class ParameterError(HyperTPCAError, ValueError):
    """Invalid numeric parameters (n, p, m, ell, lambda, ...)."""


class ShapeError(HyperTPCAError, ValueError):
    """An edge or vector has the wrong arity or length."""


class CapacityError(HyperTPCAError):
    """A computation would exceed a configured size or time budget."""


class FamilyError(HyperTPCAError):
    """A hypergraph family is empty or inconsistent with the request."""


class ConfigError(HyperTPCAError, ValueError):
    """An experiment configuration is malformed."""
