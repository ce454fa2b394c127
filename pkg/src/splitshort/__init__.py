"""Learned shortcutting of split decisions in multi-node order fulfillment."""
__version__ = "0.1.0"
