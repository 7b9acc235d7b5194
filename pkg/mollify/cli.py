"""cli.py is the entry point of the mollify command line."""

import argparse
import logging.config
import sys

from mollify import __version__
from mollify.commands import COMMAND_NAMES, load_command
from mollify.settings import logging_config


def build_parser(commands):
    """build_parser returns the top-level parser with one subparser per command."""
    parser = argparse.ArgumentParser(prog="mollify", description="Gaussian-smoothed gradient descent experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="debug logging")
    parser.add_argument("--quiet", action="store_true", help="only log warnings")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in commands.items():
        sub = subparsers.add_parser(name, help=command.help, description=command.help)
        command.add_arguments(sub)
    return parser


def main(argv=None, stdout=None, stderr=None):
    """Main parses argv, configures logging and returns the exit code of the chosen command."""
    commands = {name: load_command(name, stdout=stdout, stderr=stderr) for name in COMMAND_NAMES}
    parser = build_parser(commands)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    logging.config.dictConfig(logging_config(args.verbose, args.quiet))
    options = vars(args)
    command = commands[options.pop("command")]
    return command.handle(**options)


if __name__ == "__main__":
    sys.exit(main())
