"""Exception types shared across the package."""


class NbtreeError(Exception):
    """Base class for all package-specific errors."""


class CapExceededError(NbtreeError, ValueError):
    """A size cap (ball size, enumeration size, orbit size) would be exceeded."""


class InteriorityError(NbtreeError, ValueError):
    """An operation needs a full neighborhood that the truncated ball cuts off."""


class LabelCollisionError(NbtreeError, RuntimeError):
    """Two labels inside one encoding ball coincide; the encoding is undefined."""


class ReconstructionError(NbtreeError, RuntimeError):
    """Path reconstruction found no unique common label at some position."""


class NonExchangeableError(NbtreeError, ValueError):
    """A joint distribution that must be swap-symmetric is not."""
