"""cavmodes package entrypoints."""

from .cli import app


def main() -> None:
    """Run the cavmodes command-line interface."""
    app()


__all__ = ["app", "main"]
