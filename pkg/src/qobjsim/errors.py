"""Exceptions shared by the engines and the service."""


class Cancelled(Exception):
    """Raised between shots when a running job has been asked to stop."""
