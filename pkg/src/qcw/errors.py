"""Exception types shared across the workbench.

The CLI maps these onto exit codes: ``InputError`` -> 2, ``CapError`` -> 3.
"""


class InputError(ValueError):
    """Malformed or inconsistent input (bad sizes, supports, schema)."""

    code = "input_error"


class CapError(InputError):
    """A configured resource cap (register size, support size) was exceeded."""

    code = "resource_cap"


class LayoutError(InputError):
    """Register layout does not match what an operation expects."""

    code = "layout_mismatch"
