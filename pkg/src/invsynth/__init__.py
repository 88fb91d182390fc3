"""Loop-invariant synthesis for linear CHCs by template-based CEGIS."""

__version__ = "0.1.0"
