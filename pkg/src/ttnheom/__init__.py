"""Tree-tensor-network hierarchical equations of motion solver."""

__version__ = "0.1.0"
