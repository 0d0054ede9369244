"""Multi-view graph fusion for role-successor retrieval from email logs."""

__version__ = "0.1.0"
