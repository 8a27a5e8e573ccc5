from entroscope.config import settings

__version__ = "0.1.0"

__all__ = ["__version__", "settings"]
