class ExtractionError(ValueError):
    """Bad job spec or malformed input data; maps to exit code 2 in the CLI."""
