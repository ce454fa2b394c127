"""Exception hierarchy shared by every module."""


class SplitShortError(Exception):
    """Base class; ``code`` is a stable machine-readable tag."""

    code = "ERROR"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def to_record(self):
        rec = {"code": self.code, "message": str(self)}
        rec.update({k: v for k, v in self.context.items() if v is not None})
        return rec


class ConfigError(SplitShortError):
    code = "CONFIG_ERROR"

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}", field=field)
        self.field = field


class GenerationError(SplitShortError):
    code = "GENERATION_ERROR"


class InfeasibleOrderError(SplitShortError):
    code = "INFEASIBLE_ORDER"

    def __init__(self, order_id, message="no feasible assignment"):
        super().__init__(f"order {order_id}: {message}", order_id=order_id)
        self.order_id = order_id


class InvalidOrderError(SplitShortError):
    code = "INVALID_ORDER"

    def __init__(self, order_id, violations):
        codes = ", ".join(v.code for v in violations)
        super().__init__(f"order {order_id}: {codes}", order_id=order_id)
        self.order_id = order_id
        self.violations = violations


class CatalogError(SplitShortError):
    code = "CATALOG_ERROR"


class DegenerateTrainingError(SplitShortError):
    code = "DEGENERATE_TRAINING"


class CompositionError(SplitShortError):
    code = "COMPOSITION_ERROR"


class InferenceError(SplitShortError):
    code = "INFERENCE_ERROR"


class ShapeError(SplitShortError, ValueError):
    code = "SHAPE_ERROR"


class StratificationError(SplitShortError):
    code = "STRATIFICATION_ERROR"


class FormatError(SplitShortError):
    """Malformed input file. ``line`` is 1-based when known."""

    code = "PARSE_ERROR"

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message, path=None if path is None else str(path), line=line)
        self.path = path
        self.line = line


class VersionError(FormatError):
    code = "VERSION_ERROR"
