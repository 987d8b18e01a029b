"""pva-forge: exact symbolic computation for nonlocal Poisson vertex algebras.

Subpackage map:

- ``diffalg``      differential polynomial algebra over Q[z], variational calculus
- ``psido``        matrix pseudodifferential operators, Dieudonne determinant,
                   kernel-triviality certificates
- ``brackets``     lambda brackets via the master formula, PVA axiom checks
- ``liedata``      exact Lie-algebra data (sl_n, root systems, sl2 triples, gradings)
- ``dirac``        Dirac modification of (bi-)Poisson structures by constraints
- ``magri``        Lenard-Magri recursion: exactness, integration, association
- ``hierarchies``  concrete integrable hierarchies and their frozen fixtures
- ``cli``          command line interface

Everything is exact: coefficients are ``fractions.Fraction`` polynomials in one
central parameter z, never floats.
"""

__version__ = "0.1.0"
