"""Shared exception type for data and contract violations."""


class DataError(ValueError):
    """Invalid data, file contents, or a violated precondition.

    The CLI maps this (and I/O failures) to exit code 2, keeping it distinct
    from usage errors (exit 1).
    """
