"""commands contains the subcommands of the mollify command line.

Each module defines a `Command` class; the subcommand name is the module name with dashes.
"""

import importlib
import sys

COMMAND_NAMES = ("run", "validate-schedules", "oracle-check", "auc-demo")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


class BaseCommand:
    """BaseCommand is the parent of every subcommand."""

    help = ""
    name = ""

    def __init__(self, stdout=None, stderr=None):
        """Bind the output streams, the process streams by default."""
        self.stdout = stdout if stdout is not None else sys.stdout
        self.stderr = stderr if stderr is not None else sys.stderr

    def add_arguments(self, parser):
        """Add the subcommand's arguments to its parser."""

    def handle(self, **options):
        """Run the subcommand and return its exit code."""
        raise NotImplementedError("subclasses of BaseCommand must provide a handle() method")

    def write(self, message=""):
        """Write a line to stdout."""
        self.stdout.write(f"{message}\n")

    def fail(self, message, code):
        """Fail reports message on stderr and returns code."""
        self.stderr.write(f"{self.name}: {message}\n")
        return code


def load_command(name, **kwargs):
    """load_command instantiates the Command class of subcommand name."""
    if name not in COMMAND_NAMES:
        raise KeyError(f"unknown command {name!r}")
    module = importlib.import_module(f"mollify.commands.{name.replace('-', '_')}")
    command = module.Command(**kwargs)
    command.name = name
    return command
