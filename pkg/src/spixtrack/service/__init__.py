"""HTTP service layer wrapping the tracker."""

from .app import create_app

__all__ = ["create_app"]
