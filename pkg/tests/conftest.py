"""Shared test helpers: deterministic random instances and frozen oracles.

Every random test builds its own seeded generator so single tests
reproduce in isolation. The acceptance tests are summarized at the end
of the run, one line per criterion.
"""

import re
from pathlib import Path as _FsPath

import numpy as np

from cjsr import Automaton, SwitchedSystem
from cjsr.numerics import spectral_norm

EXAMPLE_FILE = _FsPath(__file__).resolve().parent.parent / "examples" / "sec5.json"

# The four matrices shipped in examples/sec5.json, label order.
BUNDLED_MATRICES = (
    ((-0.67, 0.26), (0.82, -0.28)),
    ((1.13, 0.13), (-0.82, -0.28)),
    ((0.46, 0.18), (0.76, 0.46)),
    ((0.28, 0.76), (-0.14, 0.65)),
)

# Oracle values for the bundled matrices, one per label. Radii from the
# exact 2x2 characteristic polynomial evaluated in extended precision,
# norms from a long power iteration on A^T A cross-checked against the
# closed-form singular values.
BUNDLED_RADII = (
    0.9762235030403104,
    1.0498399795147553,
    0.8298648401781386,
    0.5370288632839021,
)
BUNDLED_NORMS = (
    1.1255143970204822,
    1.4222659663161659,
    1.013783044972901,
    1.0080951784273835,
)


def random_automaton(rng, num_nodes, num_labels, extra_edges=2):
    """Strongly connected labeled graph using every label.

    A random ring over all nodes guarantees strong connectivity; any
    label missing from the ring is placed on a fresh random edge, then
    extra random edges are sprinkled on top.
    """
    order = [int(v) + 1 for v in rng.permutation(num_nodes)]
    ring = order + [order[0]]
    edges = set()
    for a, b in zip(ring, ring[1:]):
        edges.add((a, b, int(rng.integers(1, num_labels + 1))))
    for s in range(1, num_labels + 1):
        if any(e[2] == s for e in edges):
            continue
        free = [
            (u, v, s)
            for u in range(1, num_nodes + 1)
            for v in range(1, num_nodes + 1)
        ]
        edges.add(free[int(rng.integers(0, len(free)))])
    for _ in range(extra_edges):
        edges.add(
            (
                int(rng.integers(1, num_nodes + 1)),
                int(rng.integers(1, num_nodes + 1)),
                int(rng.integers(1, num_labels + 1)),
            )
        )
    return Automaton(num_nodes, num_labels, sorted(edges))


def random_system(rng, dim, num_nodes, num_labels, extra_edges=2, norm_cap=None):
    """Random system on a random_automaton graph.

    With norm_cap set, matrices are rescaled so the largest spectral
    norm equals norm_cap exactly; norm_cap < 1 then guarantees a stable
    system (every length-t product is bounded by norm_cap^t).
    """
    aut = random_automaton(rng, num_nodes, num_labels, extra_edges=extra_edges)
    mats = [rng.uniform(-1.0, 1.0, (dim, dim)) for _ in range(num_labels)]
    if norm_cap is not None:
        top = max(spectral_norm(a) for a in mats)
        mats = [a * (norm_cap / top) for a in mats]
    return SwitchedSystem(aut, mats)


def single_loop_system(matrix):
    """One node, one self-loop, one matrix: the unconstrained one-mode case."""
    aut = Automaton(1, 1, [(1, 1, 1)])
    return SwitchedSystem(aut, [np.asarray(matrix, dtype=np.float64)])


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


_CRITERIA = {
    1: "pinned spectral radius of the second bundled matrix, under 1 ms",
    2: "single-matrix sandwich: cycle bound <= gamma* <= sqrt(n) * radius",
    3: "lift growth identity rho_k(lift T) = rho_kT^T to 1e-12",
    4: "horizon formula reaches 10% relative precision on known rates",
    5: "lift certificate converts to a verified path-indexed one, 50/50",
    6: "path-indexed memory T-1 never beats the depth-T lift by > 2 tol",
    7: "guaranteed accuracy column equals n^(1/(2T)) - 1 to 1e-12",
    8: "gamma* scales linearly with the matrix set",
    9: "frozen regression table on the bundled example",
}
_outcomes = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    if report.when == "call" or report.outcome == "failed":
        prev = _outcomes.get(num)
        if prev != "failed":
            _outcomes[num] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        outcome = _outcomes.get(num, "not run")
        word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            outcome, outcome.upper()
        )
        terminalreporter.write_line(f"criterion {num}: {word}  ({_CRITERIA[num]})")
