"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Vector lengths do not line up."""


class StructureError(ValueError):
    """A policy tree is malformed (missing children, ragged depth, bad action index)."""


class UnsupportedModelError(ValueError):
    """The model lacks a property an algorithm relies on."""


class ResourceGuardError(RuntimeError):
    """A configured memory/size guard would be exceeded."""


class ConfigError(ValueError):
    """Invalid configuration or inconsistent inputs."""
