"""One module per command-line command; each exposes DEFAULTS, add_arguments(parser) and run(settings)"""
