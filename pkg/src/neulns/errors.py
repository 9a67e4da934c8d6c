"""Exception types shared across the package."""


class NeulnsError(Exception):
    """Base class for all package-specific errors."""


class InvalidRoute(NeulnsError):
    """A route references a node that does not exist in the instance."""


class IncompleteSolution(NeulnsError):
    """Operation requires a complete solution but unassigned nodes remain."""


class InvalidDestroySet(NeulnsError):
    """Destroy set contains the depot, unknown nodes, or unassigned nodes."""


class InfeasibleNode(NeulnsError):
    """A node cannot be feasibly inserted anywhere, not even alone."""


class ParseError(NeulnsError):
    """Malformed instance/solution file."""


class SchemaError(NeulnsError):
    """File parsed but violates the expected schema."""


class IsolatedNode(NeulnsError):
    """Attention mask leaves a node with no unmasked in-neighbor."""


class InvalidM(NeulnsError):
    """Requested removal count exceeds the number of available customers."""


class CheckpointMismatch(NeulnsError):
    """Checkpoint tensor shapes do not match the current model config."""


class TrainingDiverged(NeulnsError):
    """Loss became non-finite during training."""
