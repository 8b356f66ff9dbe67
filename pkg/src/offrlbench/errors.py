"""Exception types shared across training code."""


class DivergenceError(RuntimeError):
    """A training loop produced a non-finite loss and was aborted."""
