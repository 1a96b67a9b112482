"""Importing this package registers every subcommand."""
from energy_cli.commands import bounds, disk, energy, maps, studies, variational  # noqa: F401
