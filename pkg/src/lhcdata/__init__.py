"""Toolkit for columnar collider event data.

Modules
-------
kinematics  four-vectors, angles, MET and isolation
model       event records, schema, validation and the columnar table
jetclust    anti-kT jet clustering
toygen      seeded toy generator and detector response
columnar    file formats, compression and the I/O benchmark
analysis    selections, histograms, comparisons and eta-phi images
cli         the ``lhcdata`` command
"""

__version__ = "0.1.0"
