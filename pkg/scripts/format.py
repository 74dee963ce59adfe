"""
Poetry script: poetry run format.
Sort imports, format with black and apply ruff's safe fixes.
"""

from scripts.common import python_paths, run_step


def run():
    for command in (
        ["isort", "--profile", "black", *python_paths],
        ["black", "--quiet", *python_paths],
        ["ruff", "check", "--fix", *python_paths],
    ):
        exit_code = run_step(command)
        if exit_code != 0:
            return exit_code
    return 0
