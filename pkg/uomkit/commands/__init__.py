"""Subcommands of the uomkit command line.

Every module in this package defines one :class:`~uomkit.base_command.BaseCommand`
subclass and a ``get_command()`` factory; the registry discovers them at
runtime.
"""
