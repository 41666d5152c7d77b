"""Executable kernel for Event-B-style machine/context specifications.

Parse machines and contexts from ``.ebs`` text, resolve refinement and
extension chains, generate and discharge proof obligations by bounded
enumeration, model-check invariants and deadlock freedom, check
superposition refinements, and animate scenarios interactively or from
script files.  A complete worked model of a hemodialysis machine's safety
monitors ships as the built-in corpus (``ebskit.corpus``).
"""

__version__ = "0.1.0"
