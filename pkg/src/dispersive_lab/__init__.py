"""Desk-scale lab for periodic Strichartz counting, Weyl-sum kernel splits,
and fifth-order KdV-type Picard experiments."""

__version__ = "0.1.0"
