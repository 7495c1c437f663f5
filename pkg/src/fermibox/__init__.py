"""Free fermions in a box, compact-group eigenvalue ensembles, and the
determinantal machinery connecting them."""

__version__ = "0.1.0"
