"""netwell: weekly communication-network snapshots joined with wearable
behavior features, structure-behavior correlation analysis, and
wellness-state prediction with a weighted-voting ensemble.

The pipeline stages (see :mod:`netwell.cli`):

    synth -> ingest -> graph -> features -> analyze -> train -> report
"""

__version__ = "0.1.0"
