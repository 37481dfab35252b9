"""Colored console output for the command line."""

from typing import Optional

import click

_STYLES = {
    "red": {"fg": "red"},
    "green": {"fg": "green"},
    "yellow": {"fg": "yellow"},
    "purple": {"fg": "magenta"},
    "bold_green": {"fg": "green", "bold": True},
    "bold_blue": {"fg": "blue", "bold": True},
    "bold_purple": {"fg": "magenta", "bold": True},
}


class Printer:
    """Handles colored console output formatting."""

    @staticmethod
    def print(content: str, color: Optional[str] = None, err: bool = False) -> None:
        """Print ``content``; unknown or missing colors print plain text."""
        click.echo(click.style(content, **_STYLES.get(color, {})), err=err)

    @staticmethod
    def error(content: str) -> None:
        Printer.print(f"Error: {content}", "red", err=True)

    @staticmethod
    def summary(title: str, values: dict) -> None:
        """Stage summary as ``key: value`` lines under a bold title."""
        Printer.print(title, "bold_green")
        width = max((len(str(key)) for key in values), default=0)
        for key, value in values.items():
            if isinstance(value, float):
                value = f"{value:.6g}"
            Printer.print(f"  {str(key):<{width}}  {value}")
