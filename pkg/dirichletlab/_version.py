"""
Version information for the dirichletlab package.
This is the single source of truth for the package version.
"""

__version__ = "0.1.0"
