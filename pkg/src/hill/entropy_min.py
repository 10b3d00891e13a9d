"""Greedy structural-entropy minimization (height-K coding tree
construction) and an exhaustive oracle for small graphs.

The greedy construction grows the tree one level per iteration, choosing
between refining at the root or refining every parent-of-leaves node,
whichever merged tree has lower entropy. The inner two-level step
compresses the best sibling pair until two children remain, then deletes
the internal node with the smallest entropy increase until height 2.
All argmax/argmin ties break on the lexicographically smallest node-id
pair, so construction is deterministic.
"""

from __future__ import annotations

import heapq
import math

from .coding_tree import CodingTree, TreeNode, initial_tree
from .graph import Graph, cross_edges, cut_size, subset_volume

ORACLE_MAX_VERTICES = {2: 8, 3: 5}


def _term(cut, vol, parent_vol, vol_g):
    if cut == 0:
        return 0.0
    return -(cut / vol_g) * math.log2(vol / parent_vol)


def delta_compress(tree: CodingTree, a_id: int, b_id: int) -> float:
    """Entropy change of compress(a, b), from cached local quantities only.

    Equals structural_entropy(after) - structural_entropy(before) exactly.
    """
    if a_id == b_id:
        raise ValueError("compress needs two distinct nodes")
    a, b = tree.nodes[a_id], tree.nodes[b_id]
    if a.parent is None or a.parent != b.parent:
        raise ValueError(f"nodes {a_id} and {b_id} are not siblings")
    vol_g = tree.graph.volume
    parent_vol = tree.nodes[a.parent].volume
    gamma_vol = a.volume + b.volume
    gamma_cut = a.cut + b.cut - 2 * cross_edges(tree.graph, a.subset, b.subset)
    before = _term(a.cut, a.volume, parent_vol, vol_g) + _term(b.cut, b.volume, parent_vol, vol_g)
    after = (
        _term(a.cut, a.volume, gamma_vol, vol_g)
        + _term(b.cut, b.volume, gamma_vol, vol_g)
        + _term(gamma_cut, gamma_vol, parent_vol, vol_g)
    )
    return after - before


def delta_remove(tree: CodingTree, v_id: int) -> float:
    """Entropy change of remove_node(v), from cached local quantities only."""
    v = tree.nodes[v_id]
    if v.parent is None:
        raise ValueError("cannot remove the root")
    if v.is_leaf():
        raise ValueError(f"cannot remove leaf {v_id}")
    vol_g = tree.graph.volume
    parent_vol = tree.nodes[v.parent].volume
    delta = -_term(v.cut, v.volume, parent_vol, vol_g)
    for c_id in v.children:
        c = tree.nodes[c_id]
        delta += _term(c.cut, c.volume, parent_vol, vol_g) - _term(c.cut, c.volume, v.volume, vol_g)
    return delta


def _sub_tree_over_children(tree: CodingTree, v_id: int) -> CodingTree:
    """Scratch tree rooted at a copy of v whose leaves copy v's children,
    keyed by marked subset (what merge matches on)."""
    v = tree.nodes[v_id]
    sub = CodingTree(tree.graph)
    for c_id in sorted(v.children):
        c = tree.nodes[c_id]
        sub._alloc(None, c.subset, c.volume, c.cut, 1)
    root = sub._alloc(None, v.subset, v.volume, v.cut, 0)
    root.children = list(range(len(v.children)))
    for leaf in root.children:
        sub.nodes[leaf].parent = root.id
    sub.root_id = root.id
    return sub


def build_two_level(tree: CodingTree, v_id: int) -> CodingTree:
    """Two-level sub-tree over v's children: greedy pair compression,
    then minimum-increase deletion down to height 2, then align."""
    if tree.nodes[v_id].is_leaf():
        raise ValueError(f"node {v_id} is a leaf")
    sub = _sub_tree_over_children(tree, v_id)
    root = sub.nodes[sub.root_id]

    # compress loop: max-heap of pair deltas, lazily invalidated
    heap = []
    alive = set(root.children)
    members = sorted(alive)
    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            heapq.heappush(heap, (delta_compress(sub, a, b), a, b))
    while len(root.children) > 2:
        delta, a, b = heapq.heappop(heap)
        if a not in alive or b not in alive:
            continue
        gamma = sub.compress(a, b)
        alive.discard(a)
        alive.discard(b)
        for other in sorted(alive):
            pair = (min(other, gamma), max(other, gamma))
            heapq.heappush(heap, (delta_compress(sub, *pair), *pair))
        alive.add(gamma)

    # removal loop: flatten back down to height 2
    while sub.height > 2:
        best = None
        for n in sub.nodes.values():
            if n.parent is None or n.is_leaf():
                continue
            key = (delta_remove(sub, n.id), n.id)
            if best is None or key < best:
                best = key
        sub.remove_node(best[1])

    sub.align(2)
    return sub


def build_coding_tree(g: Graph, k: int) -> CodingTree:
    """Greedy coding tree of height exactly k (2 <= k < |V|)."""
    if k < 2:
        raise ValueError(f"height must be at least 2, got {k}")
    if k >= g.node_count:
        raise ValueError(f"height {k} not realizable on {g.node_count} vertices")
    tree = initial_tree(g)
    tree.merge(tree.root_id, build_two_level(tree, tree.root_id))
    while tree.height < k:
        # candidate 1: refine the partition at the root
        t1 = tree.copy()
        t1.merge(t1.root_id, build_two_level(t1, t1.root_id))
        # candidate 2: refine below every parent-of-leaves node
        t2 = tree.copy()
        for v in t2.parents_of_leaves():
            t2.merge(v, build_two_level(t2, v))
        tree = t1 if t1.structural_entropy() < t2.structural_entropy() else t2
    return tree


# -- exhaustive oracle -----------------------------------------------


def set_partitions(items):
    """All set partitions of `items`, blocks ordered by smallest element."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1 :]
        yield [[first]] + partition


def _layered_entropy(g: Graph, layers) -> float:
    """Entropy of the tree described by nested vertex-subset layers,
    computed directly from the graph (no tree caches).

    `layers` runs bottom-up, excluding the leaf layer and the root; each
    entry is a list of vertex sets, each nested in some set one level up.
    """
    vol_g = g.volume
    total = 0.0
    # leaf terms against their immediate enclosing block
    lowest = layers[0] if layers else [set(range(g.node_count))]
    for block in lowest:
        bvol = subset_volume(g, block)
        for v in block:
            total += _term(g.degree[v], g.degree[v], bvol, vol_g)
    for i, layer in enumerate(layers):
        upper = layers[i + 1] if i + 1 < len(layers) else [set(range(g.node_count))]
        for block in layer:
            parent = next(u for u in upper if set(block) <= set(u))
            total += _term(
                cut_size(g, block), subset_volume(g, block), subset_volume(g, parent), vol_g
            )
    return total


def _tree_from_layers(g: Graph, layers) -> CodingTree:
    """Build an explicit coding tree from bottom-up nested layers and
    align it to uniform leaf depth."""
    tree = CodingTree(g)
    height = len(layers) + 1
    for v in range(g.node_count):
        tree._alloc(None, frozenset({v}), g.degree[v], g.degree[v], height)
    root = tree._alloc(None, frozenset(range(g.node_count)), g.volume, 0, 0)
    tree.root_id = root.id
    below = {frozenset({v}): v for v in range(g.node_count)}
    for depth_idx, layer in enumerate(layers):
        depth = height - 1 - depth_idx
        current = {}
        for block in layer:
            s = frozenset(block)
            node = tree._alloc(None, s, subset_volume(g, s), cut_size(g, s), depth)
            kids = sorted(c for sub, c in below.items() if sub <= s)
            node.children = kids
            for c in kids:
                tree.nodes[c].parent = node.id
            current[s] = node.id
        below = current
    root.children = sorted(below.values())
    for c in root.children:
        tree.nodes[c].parent = root.id
    tree.align(height)
    return tree


def oracle_min_entropy(g: Graph, k: int):
    """Exact minimum entropy over all coding trees of height <= k, by
    exhaustive enumeration of (nested) set partitions. Returns
    (optimal tree, entropy)."""
    if k not in ORACLE_MAX_VERTICES:
        raise ValueError(f"oracle supports heights 2 and 3, got {k}")
    if g.node_count > ORACLE_MAX_VERTICES[k]:
        raise ValueError(
            f"oracle limited to {ORACLE_MAX_VERTICES[k]} vertices for height {k}, "
            f"graph has {g.node_count}"
        )
    best_entropy = None
    best_layers = None
    for partition in set_partitions(range(g.node_count)):
        blocks = [set(b) for b in partition]
        if k == 2:
            candidates = [[blocks]]
        else:
            candidates = []
            for grouping in set_partitions(range(len(blocks))):
                groups = [set().union(*(blocks[i] for i in grp)) for grp in grouping]
                candidates.append([blocks, groups])
        for layers in candidates:
            h = _layered_entropy(g, layers)
            if best_entropy is None or h < best_entropy:
                best_entropy = h
                best_layers = [[sorted(b) for b in layer] for layer in layers]
    tree = _tree_from_layers(g, best_layers)
    return tree, best_entropy
