"""
The guimigrate package migrates GUI tests between apps that implement the same functionality.

The most common entry points are :func:`guimigrate.migrator.migrate` for one task and
:func:`guimigrate.harness.run_benchmark` for a dataset; ``python -m guimigrate`` runs the
command-line interface.
"""

from guimigrate.version import VERSION
from guimigrate.util import log

__version__ = VERSION
