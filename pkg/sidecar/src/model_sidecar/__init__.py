"""Model sidecar: embeddings and chat-style generation over HTTP."""

__version__ = "0.1.0"

from .app import create_app
from .config import SidecarConfig

__all__ = ["SidecarConfig", "create_app"]
