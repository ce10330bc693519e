"""Counting and exhaustive generation of acyclic H/C/N/O/F structures."""

from .series import (CycleIndex, DivisibilityError, ElementVector, GradedSeries,
                     NegativeCoefficient, add, apply_cycle_index, cycle_index, dct_unroot,
                     mul, otter_unroot, plethysm_power, rooted_trees_series,
                     solve_rooted_series)
from .structures import (CardinalityMismatch, FreeStructure, RootedStructure, StructureSet,
                         assemble_free, canonical_rooted_code, generate_free, grow_rooted,
                         heavy_orbits, k_multisets, molecular_formula, parse_code)

__version__ = "0.1.0"
