"""Affine connections in coordinates: lifts to TM and TTM, flows, parallel
transport, flow-composition estimators of the symmetric product, and a
harness for geodesically invariant distributions."""

__version__ = "0.1.0"
