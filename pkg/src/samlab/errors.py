"""Exception types shared across the package."""


class SamlabError(Exception):
    """Base class for all samlab errors."""


class DimensionError(SamlabError):
    """Vector lengths do not match."""


class NonFiniteError(SamlabError):
    """A NaN or Inf appeared where only finite values are allowed."""


class NoDescentDirection(SamlabError):
    """The gradient (or its rescaled image) has zero norm, so the
    normalized perturbation direction is undefined."""


class ConfigError(SamlabError):
    """Invalid or inconsistent experiment configuration."""


class FormatError(SamlabError):
    """Malformed binary or text input file."""


class InvalidModelError(SamlabError):
    """Model construction arguments violate a model precondition."""
