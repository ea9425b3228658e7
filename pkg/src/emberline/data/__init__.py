"""Packaged reference data files (conductor catalogue, fire heating table)."""
