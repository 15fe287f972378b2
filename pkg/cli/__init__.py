"""Command-line surface: `python main.py <analytic|experiment|selftest> ...`."""

__version__ = "0.1.0"
TOOL_NAME = "watchdog-lab"
