"""
Poetry script: poetry run check.
Lint with ruff, verify black and isort formatting, then type check with ty.
"""

import argparse

from scripts.common import Colors, python_paths, run_step


def check_python(args: argparse.Namespace) -> int:
    lint = ["ruff", "check", *python_paths]
    if args.fix:
        lint += ["--fix", "--unsafe-fixes"]
    exit_code = run_step(
        lint,
        "Ruff issues found. Please run 'poetry run check --fix' to fix them, or manually fix them.",
    )
    if exit_code != 0:
        return exit_code

    if not args.fix:
        for tool in (["black", "--check", "--quiet"], ["isort", "--check-only", "--profile", "black"]):
            exit_code = run_step(
                [*tool, *python_paths], "Formatting issues found. Please run 'poetry run format'."
            )
            if exit_code != 0:
                return exit_code

    exit_code = run_step(
        ["ty", "check", "--python-version=3.10"],
        "Type check issues found. Please fix them manually.",
    )
    if exit_code != 0:
        return exit_code
    print(f"{Colors.GREEN}No Python issues found ✅{Colors.RESET}")
    return 0


def run():
    parser = argparse.ArgumentParser()
    parser.add_argument(
        "--fix",
        help="Automatically fix linting issues",
        action=argparse.BooleanOptionalAction,
    )

    args = parser.parse_args()

    return check_python(args)
