"""Switched linear systems over a switching graph, and their path lifts.

A system pairs an automaton with one n x n matrix per label. A trajectory
following a path applies matrices in time order, so the product attached
to a path with labels (s_1, ..., s_T) is A_{s_T} @ ... @ A_{s_1}.

The depth-T lift replaces edges by length-T paths: one lifted edge per
path, carrying the path's word and matrix product, between the path's
endpoints. Node set and state dimension are unchanged, so quadratic-form
programs on the lift keep the same unknowns while constraining every
length-T product at once.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .automaton import DEFAULT_PATH_CAP, Automaton, iter_path_blocks
from .errors import DimensionMismatch


def _frozen_matrix(a, n, what):
    arr = np.array(a, dtype=np.float64)
    if arr.shape != (n, n):
        raise DimensionMismatch(f"{what} has shape {arr.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{what} has non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SwitchedSystem:
    """An automaton plus one matrix per label. Immutable after construction."""

    automaton: Automaton
    matrices: tuple

    def __init__(self, automaton, matrices):
        automaton.validate()
        mats = list(matrices)
        if len(mats) != automaton.num_labels:
            raise DimensionMismatch(
                f"got {len(mats)} matrices for {automaton.num_labels} labels"
            )
        n = np.asarray(mats[0]).shape[0]
        frozen = tuple(
            _frozen_matrix(a, n, f"matrix for label {i + 1}")
            for i, a in enumerate(mats)
        )
        object.__setattr__(self, "automaton", automaton)
        object.__setattr__(self, "matrices", frozen)

    @property
    def dim(self):
        return self.matrices[0].shape[0]

    @property
    def num_nodes(self):
        return self.automaton.num_nodes

    def matrix(self, label):
        return self.matrices[label - 1]

    @cached_property
    def _mat_stack(self):
        return np.stack(self.matrices)

    def scaled(self, alpha):
        return SwitchedSystem(self.automaton, [alpha * a for a in self.matrices])


def scale(system, alpha):
    """The system with every matrix multiplied by alpha."""
    return system.scaled(alpha)


def product_along_word(system, word):
    """Time-ordered product for a label sequence: A_{word[-1]} @ ... @ A_{word[0]}.

    Evaluated through the same kernel as lift(), so recomputing a lifted
    edge's product reproduces it bit for bit.
    """
    row = np.asarray([[s - 1 for s in word]], dtype=np.int64)
    return K.chain_products(system._mat_stack, row)[0]


class LiftedEdge(NamedTuple):
    from_node: int
    to_node: int
    word: tuple
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class LiftedSystem:
    """Depth-T path lift: one edge per length-T path of the base graph."""

    base: SwitchedSystem
    depth: int
    edges: tuple

    @property
    def num_nodes(self):
        return self.base.num_nodes

    @property
    def dim(self):
        return self.base.dim

    @cached_property
    def as_system(self):
        """The lift as a plain system: distinct words become fresh labels.

        Lifted edges that agree in endpoints and word collapse to a single
        edge (their matrices are identical by construction). Words are
        numbered 1..W in lexicographic order.
        """
        words = sorted({e.word for e in self.edges})
        word_id = {w: i + 1 for i, w in enumerate(words)}
        triples = sorted({(e.from_node, e.to_node, word_id[e.word]) for e in self.edges})
        aut = Automaton(self.base.num_nodes, len(words), triples)
        mats = [product_along_word(self.base, w) for w in words]
        return SwitchedSystem(aut, mats)

    @property
    def words(self):
        """Word table of as_system: entry k is the word behind label k+1."""
        return sorted({e.word for e in self.edges})


def lift(system, depth, cap=DEFAULT_PATH_CAP):
    """Build the depth-T lift; one LiftedEdge per length-T base path."""
    if depth < 1:
        raise ValueError("lift depth must be >= 1")
    aut = system.automaton
    arr = aut._edge_arr
    mats = system._mat_stack
    lifted = []
    for idx, svec, ends in iter_path_blocks(aut, depth, cap=cap):
        labels = arr[idx, 2]
        prods = K.chain_products(mats, labels - 1)
        for row in range(idx.shape[0]):
            word = tuple(int(s) for s in labels[row])
            mat = prods[row].copy()
            mat.flags.writeable = False
            lifted.append(
                LiftedEdge(int(svec[row]), int(ends[row]), word, mat)
            )
    return LiftedSystem(system, depth, tuple(lifted))


def as_switched_system(system_or_lift):
    """Common view used by growth and feasibility code."""
    if isinstance(system_or_lift, LiftedSystem):
        return system_or_lift.as_system
    return system_or_lift
