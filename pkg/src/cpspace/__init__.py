"""Workbench for space-bounded set machines.

Subpackages cover the interned set universe (hf), machine syntax and
semantics (syntax, machine), space-bounded runs (monitor), fixed-point
formula extraction and evaluation (pfp), supports and forms (symmetry),
and pebble games between structures (pebble).  The cli module exposes
all of it as one command-line tool.
"""

from cpspace.hf import Universe

__all__ = ["Universe"]
__version__ = "0.1.0"
