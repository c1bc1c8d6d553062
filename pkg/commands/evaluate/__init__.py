from commands.evaluate.main import DEFAULTS, add_arguments, render

run = render

__all__ = ["DEFAULTS", "add_arguments", "render", "run"]
