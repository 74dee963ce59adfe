import shlex
from subprocess import run as process_run

python_paths = ["datashare", "scripts"]


class Colors:
    """ANSI color codes for terminal output."""

    RESET = "\033[0m"
    BOLD = "\033[1m"
    GREEN = "\033[92m"
    YELLOW = "\033[93m"
    GRAY = "\033[90m"


def run_step(command: list[str], failure_hint: str | None = None) -> int:
    """Run one tool, echoing the command, and print a hint when it fails."""
    print(f"{Colors.GRAY}$ {shlex.join(command)}{Colors.RESET}")
    exit_code = process_run(command).returncode
    if exit_code != 0 and failure_hint:
        print(f"{Colors.YELLOW}{failure_hint}{Colors.RESET}")
    return exit_code
