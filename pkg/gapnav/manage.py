#!/usr/bin/env python
"""Command-line entry point for training and evaluation runs."""
import os
import sys


def main():
    """Run gapnav subcommands."""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "gapnav.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    argv = list(sys.argv)
    # Subcommands are spelled with hyphens on the command line.
    if len(argv) > 1 and not argv[1].startswith("-"):
        argv[1] = argv[1].replace("-", "_")
    execute_from_command_line(argv)


if __name__ == "__main__":
    main()
