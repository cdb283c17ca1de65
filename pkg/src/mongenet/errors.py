class UsageError(ValueError):
    """Invalid arguments or configuration (dimension mismatch, unsupported domain, ...)."""
