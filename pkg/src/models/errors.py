class HierarchyError(Exception):
    """Base class for solver errors"""

    exit_code = 3


class InputError(HierarchyError):
    """The instance or its parameters cannot be solved as given"""

    exit_code = 2


class Infeasible(HierarchyError):
    """No solution satisfies the constraints"""

    exit_code = 1


class InstanceSyntaxError(InputError):
    pass


class ValidationError(InputError):
    """A value violates a type invariant; `path` names the offending field"""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DisconnectedInput(InputError):
    pass


class EmptyGraph(InputError):
    pass


class NegativeLeafWeight(InputError):
    pass


class LengthMismatch(InputError):
    pass


class TooLargeForExact(InputError):
    pass


class TooFewSites(InputError):
    pass


class EmptyPrimarySet(InputError):
    pass


class InvalidEpsilon(InputError):
    pass


class UnknownVertex(InputError):
    pass


class UnknownKind(InputError):
    pass


class TooManyCombinations(InputError):
    pass


class DominationViolation(InputError):
    pass
