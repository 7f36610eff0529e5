"""Verification and construction toolkit for standard lambda-lattices, Markov
towers, Markov lattices and their module categories.

Modules:

* :mod:`.tl_diagram` Temperley-Lieb-Jones diagram algebras.
* :mod:`.lambda_lattice` the TLJ standard lambda-lattice and its axioms.
* :mod:`.planar_category` triple morphisms, composition, tensor products, rigidity.
* :mod:`.weighted_graph` fair and balanced edge-weighted bipartite graphs.
* :mod:`.bighilb` bigraded Hilbert spaces and duality data.
* :mod:`.markov_tower` Markov towers, Bratteli diagrams and principal graphs.
* :mod:`.biunitary` biunitary connections and Markov lattices.
* :mod:`.gpa_embed` TL diagrams in the graph planar algebra.
* :mod:`.cli` the ``subfactorlab`` command.
"""

from .report import AxiomViolation, Check, Report

__version__ = "0.1.0"

__all__ = ["AxiomViolation", "Check", "Report", "__version__"]
