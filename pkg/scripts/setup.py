"""
Poetry script: poetry run setup.
Install the pre-commit hooks that run format and check before each commit.
"""

from scripts.common import Colors, run_step


def run():
    exit_code = run_step(["pre-commit", "install"])
    if exit_code == 0:
        print(f"{Colors.GREEN}✓ Pre-commit hooks installed successfully{Colors.RESET}")
    else:
        print(f"{Colors.YELLOW}✗ Failed to install pre-commit hooks{Colors.RESET}")
    return exit_code
