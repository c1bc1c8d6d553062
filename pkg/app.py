import argparse
import importlib
import json
import logging
import sys

from config import APP_NAME, APP_VERSION, COMMANDS, EXIT_OK, EXIT_USAGE_ERROR, LOGGER_NAME
from errors import FibrosisError, FileAccessError
from utils import load_config_file, resolve_settings

logger = logging.getLogger(LOGGER_NAME)

# Parser attributes that are not command settings
GLOBAL_OPTIONS = ("command", "config", "verbose", "quiet", "_module")


def emit_error(payload):
    """Machine-readable error report on stderr"""
    print(json.dumps(payload), file=sys.stderr)


class JsonArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as JSON with exit code 2"""

    def error(self, message):
        self.print_usage(sys.stderr)
        emit_error({"error": "UsageError", "message": message, "exit_code": EXIT_USAGE_ERROR})
        sys.exit(EXIT_USAGE_ERROR)


def load_command(name):
    return importlib.import_module(f"commands.{COMMANDS[name]['module']}")


def build_parser():
    parser = JsonArgumentParser(prog=APP_NAME, description="One-shot GAN fibrosis quantification for SHG heart images")
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=JsonArgumentParser)

    for name, command in COMMANDS.items():
        module = load_command(name)
        sub = subparsers.add_parser(name, help=command["description"], description=command["description"])
        sub.add_argument("--config", help="JSON file with settings; explicit flags take precedence")
        verbosity = sub.add_mutually_exclusive_group()
        verbosity.add_argument("--verbose", action="store_true", help="Log debug messages")
        verbosity.add_argument("--quiet", action="store_true", help="Log warnings and errors only")
        module.add_arguments(sub)
        sub.set_defaults(_module=module)
    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    module = args._module
    flags = {k: v for k, v in vars(args).items() if k not in GLOBAL_OPTIONS}

    try:
        settings = resolve_settings(flags, load_config_file(args.config), module.DEFAULTS)
        settings.command = args.command
        logger.debug(f"Running {args.command} with {vars(settings)}")
        return module.run(settings) or EXIT_OK
    except OSError as e:
        error = FileAccessError(f"{e.filename or args.command}: {e.strerror or e}")
    except FibrosisError as e:
        error = e
    logger.error(f"{args.command} failed: {error}")
    emit_error(error.to_dict())
    return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
