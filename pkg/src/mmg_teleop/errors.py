"""Exception types shared across the package.

ValidationError covers rejected inputs, bad configs and malformed files; the
CLI maps it to exit code 1. Everything else that escapes is a runtime failure
(exit code 2).
"""


class ValidationError(ValueError):
    """Input, configuration or file content failed validation."""


class FrameDecodeError(ValidationError):
    """A link frame could not be decoded (size, kind or CRC mismatch)."""


class CheckpointError(ValidationError):
    """A model checkpoint is malformed or inconsistent with its config."""


class RejectedActionError(ValidationError):
    """A simulated action was refused because its preconditions do not hold.

    Raised for things like grasping while already holding an object or
    releasing while the base is still moving.
    """


class TrainingDivergedError(RuntimeError):
    """Training aborted on a non-finite loss or parameter.

    Carries the name of the first offending tensor for diagnosis.
    """

    def __init__(self, tensor_name: str, epoch: int, batch: int):
        self.tensor_name = tensor_name
        self.epoch = epoch
        self.batch = batch
        super().__init__(
            f"non-finite values in '{tensor_name}' at epoch {epoch}, batch {batch}"
        )
