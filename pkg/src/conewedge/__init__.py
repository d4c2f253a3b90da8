"""Cone-calculus asymptotics, extension checks and a porous-medium solver on a wedge."""

__version__ = "0.1.0"
