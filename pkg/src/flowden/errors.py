class FlowdenError(Exception):
    """Base class for all library errors."""


class ShapeError(FlowdenError, ValueError):
    """Operand shapes are incompatible."""

    def __init__(self, op, *shapes, detail=""):
        self.op = op
        self.shapes = shapes
        msg = f"{op}: incompatible shapes {', '.join(str(s) for s in shapes)}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ConfigError(FlowdenError, ValueError):
    """Invalid configuration value."""


class UsageError(FlowdenError, RuntimeError):
    """API called in the wrong order or state."""


class NonFiniteError(FlowdenError, FloatingPointError):
    """A NaN or Inf appeared where finite values are required.

    ``step`` is the training/integration step when known and ``context``
    carries free-form diagnostics (time, class, weighting...).
    """

    def __init__(self, message, step=None, **context):
        self.step = step
        self.context = context
        extra = ", ".join(f"{k}={v}" for k, v in context.items())
        if step is not None:
            message = f"{message} at step {step}"
        if extra:
            message = f"{message} [{extra}]"
        super().__init__(message)
