class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""
