#!/usr/bin/env python
"""Entry point for the laboratory: simulate, measure, regress, validate, migrate, test."""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the laboratory's dependencies "
            "with 'pip install -r requirements.txt' inside the virtual environment."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
