"""Device-independent randomness: Bell tests, weak sources, extractors and protocol simulation.

Subpackages and modules:

- :mod:`dirand.scenario`: measurement scenarios, behaviors, deterministic points.
- :mod:`dirand.bell`: built-in Bell expressions, estimation and entropy bounds.
- :mod:`dirand.quantum`: quantum strategies and their behaviors.
- :mod:`dirand.lp`, :mod:`dirand.polytope`: simplex solver, no-signaling and local polytope queries.
- :mod:`dirand.sources`: weak random source models.
- :mod:`dirand.extractors`, :mod:`dirand.gf2`: randomness extractors and GF(2) helpers.
- :mod:`dirand.hashcover`: covering hash families.
- :mod:`dirand.protocols`: expansion and amplification protocol runners.
- :mod:`dirand.cli`: the ``dirand`` command.
"""

from __future__ import annotations

__version__ = "0.1.0"
