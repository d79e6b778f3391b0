from .generators import generate_matrix
from .oracle import dense_reference

__all__ = ["generate_matrix", "dense_reference"]
