"""Exception types shared across the package."""


class CanomaError(Exception):
    """Base class for all canoma errors."""


class ParameterError(CanomaError, ValueError):
    """A parameter is outside its documented domain."""


class OracleUnsupportedError(CanomaError):
    """The configuration is outside the semi-analytic oracle's support.

    Monte Carlo simulation still covers these configurations; only the
    closed-form/quadrature path refuses them.
    """
