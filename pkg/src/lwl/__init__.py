"""Exact-arithmetic laboratory for local weight transforms over p-adic fields.

Everything here works at desk scale: a small odd prime p, conductor
exponents in the single digits, characters and epsilon factors evaluated as
exact roots of unity, and Hankel-type transforms carried out shell by shell
with explicit truncation certificates. The package is organized so that every
closed-form identity it implements is also checkable by an independent
brute-force route, and the test suite exercises both sides.
"""

__version__ = "0.1.0"
