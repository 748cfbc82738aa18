"""Figure scripts over the engine's CSV outputs.

The engine and these scripts share nothing but the CSV headers and the
manifest file; everything here re-reads those contracts from disk.
"""

__version__ = "0.1.0"
