"""Exact experiments on inhomogeneous and fibred Diophantine approximation.

Real parameters use the grammar ``sqrt:2``, ``log2:3``, ``rat:3/7``,
``const:golden``, ``dec:1.4142135@1e-7``; approximation functions use
``const:1/10``, ``inv:1/4``, ``invlog2:1/2``, ``gallagher:1``, ``mono2:1``
or ``table@q0:v1,v2,...``. Exact values come back as ``fractions.Fraction``
and enclosures as ``(lo, hi)`` pairs.
"""

from ._mdl import *  # noqa: F401,F403
from ._mdl import __doc__ as _native_doc  # noqa: F401
