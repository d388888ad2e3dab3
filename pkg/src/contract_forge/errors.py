"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: InputError -> 2, InfeasibleError -> 3,
ResourceError (and CapacityError) -> 4.
"""


class ContractForgeError(Exception):
    """Base class for all package errors."""


class InputError(ContractForgeError):
    """Bad arguments or malformed input data."""


class InfeasibleError(ContractForgeError):
    """A requested object provably does not exist (e.g. no implementable action)."""


class ResourceError(ContractForgeError):
    """An iteration cap or convergence budget was exhausted."""


class CapacityError(ResourceError):
    """Problem size exceeds what the dense desk-scale routines will attempt."""
