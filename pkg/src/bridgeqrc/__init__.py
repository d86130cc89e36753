"""Two coupled quantum reservoirs linked by an optimised measurement bridge."""

__version__ = "0.1.0"
