"""Coding trees over a graph, the four tree surgeries (compress, remove,
align, merge), validity checking, and structural entropy in bits.

A coding tree is a rooted tree whose leaves biject with the graph's
vertices; every node marks the vertex subset under it, and caches that
subset's volume and cut count. Entropy of a tree T over graph G:

    H(T) = -sum over non-root nodes v of (cut(v) / vol(G)) * log2(vol(v) / vol(parent(v)))

Nodes with zero cut contribute 0. Trees are single-writer; entropy reads
on distinct trees may run concurrently.
"""

from __future__ import annotations

import json
import math

from .graph import Graph, cross_edges, cut_size, subset_volume


class TreeNode:
    __slots__ = ("id", "parent", "children", "subset", "volume", "cut", "depth")

    def __init__(self, node_id, parent, subset, volume, cut, depth):
        self.id = node_id
        self.parent = parent
        self.children = []
        self.subset = subset
        self.volume = volume
        self.cut = cut
        self.depth = depth

    def is_leaf(self):
        return not self.children


class CodingTree:
    """Handle-indexed rooted tree; mutators rewire parent/children links."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self.nodes: dict[int, TreeNode] = {}
        self.root_id: int | None = None
        self._next_id = 0

    # -- construction -------------------------------------------------

    def _alloc(self, parent, subset, volume, cut, depth) -> TreeNode:
        node = TreeNode(self._next_id, parent, subset, volume, cut, depth)
        self.nodes[node.id] = node
        self._next_id += 1
        return node

    def copy(self) -> "CodingTree":
        other = CodingTree(self.graph)
        other.root_id = self.root_id
        other._next_id = self._next_id
        for nid, n in self.nodes.items():
            m = TreeNode(n.id, n.parent, n.subset, n.volume, n.cut, n.depth)
            m.children = list(n.children)
            other.nodes[nid] = m
        return other

    # -- queries ------------------------------------------------------

    @property
    def height(self) -> int:
        return max(n.depth for n in self.nodes.values() if n.is_leaf())

    def leaf_ids(self):
        return [n.id for n in self.nodes.values() if n.is_leaf()]

    def subtree_ids(self, node_id):
        out, stack = [], [node_id]
        while stack:
            nid = stack.pop()
            out.append(nid)
            stack.extend(self.nodes[nid].children)
        return out

    def layer(self, k: int):
        """Node ids at layer k, where layer 0 is the leaves and layer
        height is the root. Requires uniform leaf depth."""
        h = self.height
        return sorted(n.id for n in self.nodes.values() if n.depth == h - k)

    def parents_of_leaves(self):
        return sorted({self.nodes[l].parent for l in self.leaf_ids()})

    # -- entropy ------------------------------------------------------

    def structural_entropy(self) -> float:
        """Entropy in bits from the cached per-node volumes and cuts."""
        vol_g = self.graph.volume
        total = 0.0
        for n in self.nodes.values():
            if n.parent is None or n.cut == 0:
                continue
            total -= (n.cut / vol_g) * math.log2(n.volume / self.nodes[n.parent].volume)
        return total

    def entropy_from_scratch(self) -> float:
        """Entropy recomputed from leaf subsets and the graph, ignoring
        every cached volume/cut. Differential-test oracle for the caches."""
        subsets = {}
        for nid in sorted(self.nodes, key=lambda i: -self.nodes[i].depth):
            n = self.nodes[nid]
            if n.is_leaf():
                subsets[nid] = set(n.subset)
            else:
                s = set()
                for c in n.children:
                    s |= subsets[c]
                subsets[nid] = s
        vol_g = self.graph.volume
        total = 0.0
        for nid, s in subsets.items():
            n = self.nodes[nid]
            if n.parent is None:
                continue
            cut = cut_size(self.graph, s)
            if cut == 0:
                continue
            total -= (cut / vol_g) * math.log2(
                subset_volume(self.graph, s) / subset_volume(self.graph, subsets[n.parent])
            )
        return total

    # -- mutators -----------------------------------------------------

    def compress(self, a_id: int, b_id: int) -> int:
        """Insert a new node over siblings a and b; returns its handle."""
        if a_id == b_id:
            raise ValueError("compress needs two distinct nodes")
        a, b = self.nodes[a_id], self.nodes[b_id]
        if a.parent is None or a.parent != b.parent:
            raise ValueError(f"nodes {a_id} and {b_id} are not siblings")
        parent = self.nodes[a.parent]
        gamma = self._alloc(
            parent=parent.id,
            subset=a.subset | b.subset,
            volume=a.volume + b.volume,
            cut=a.cut + b.cut - 2 * cross_edges(self.graph, a.subset, b.subset),
            depth=a.depth,
        )
        gamma.children = [a_id, b_id]
        idx = parent.children.index(a_id)
        parent.children[idx] = gamma.id
        parent.children.remove(b_id)
        a.parent = b.parent = gamma.id
        for nid in self.subtree_ids(a_id) + self.subtree_ids(b_id):
            self.nodes[nid].depth += 1
        return gamma.id

    def remove_node(self, v_id: int) -> None:
        """Delete a non-root internal node, reattaching its children to
        its former parent."""
        v = self.nodes[v_id]
        if v.parent is None:
            raise ValueError("cannot remove the root")
        if v.is_leaf():
            raise ValueError(f"cannot remove leaf {v_id}")
        parent = self.nodes[v.parent]
        idx = parent.children.index(v_id)
        parent.children[idx : idx + 1] = v.children
        for c in v.children:
            self.nodes[c].parent = parent.id
            for nid in self.subtree_ids(c):
                self.nodes[nid].depth -= 1
        del self.nodes[v_id]

    def align(self, target_height: int | None = None) -> None:
        """Insert unary chains so every leaf sits at the target depth.

        Chain nodes inherit the leaf's subset, volume and cut, so their
        entropy terms are exactly 0. Default target is the current height.
        """
        h = self.height
        if target_height is None:
            target_height = h
        elif target_height < h:
            raise ValueError(f"target height {target_height} below current height {h}")
        for leaf_id in sorted(self.leaf_ids()):
            leaf = self.nodes[leaf_id]
            missing = target_height - leaf.depth
            if missing == 0:
                continue
            parent = self.nodes[leaf.parent]
            idx = parent.children.index(leaf_id)
            above = parent
            # bottom of the chain ends at the leaf
            for _ in range(missing):
                u = self._alloc(
                    parent=above.id,
                    subset=leaf.subset,
                    volume=leaf.volume,
                    cut=leaf.cut,
                    depth=above.depth + 1,
                )
                if above is parent:
                    parent.children[idx] = u.id
                else:
                    above.children = [u.id]
                above = u
            above.children = [leaf_id]
            leaf.parent = above.id
            leaf.depth = above.depth + 1

    def merge(self, at_id: int, sub: "CodingTree") -> None:
        """Replace the children of `at` with the middle layer of the
        height-2 tree `sub`, whose leaves must mark exactly the subsets
        of `at`'s current children."""
        at = self.nodes[at_id]
        if sub.nodes[sub.root_id].subset != at.subset:
            raise ValueError("sub-tree root marks a different subset than the merge point")
        by_subset = {self.nodes[c].subset: c for c in at.children}
        sub_root = sub.nodes[sub.root_id]
        sub_leaf_subsets = set()
        for m_id in sub_root.children:
            for l_id in sub.nodes[m_id].children:
                leaf = sub.nodes[l_id]
                if not leaf.is_leaf():
                    raise ValueError("sub-tree is not height 2")
                sub_leaf_subsets.add(leaf.subset)
        if sub_leaf_subsets != set(by_subset):
            raise ValueError("sub-tree leaves do not match the merge point's children")
        new_children = []
        for m_id in sub_root.children:
            m = sub.nodes[m_id]
            group = self._alloc(
                parent=at_id, subset=m.subset, volume=m.volume, cut=m.cut, depth=at.depth + 1
            )
            kids = []
            for l_id in m.children:
                orig = by_subset[sub.nodes[l_id].subset]
                kids.append(orig)
                self.nodes[orig].parent = group.id
                for nid in self.subtree_ids(orig):
                    self.nodes[nid].depth += 1
            group.children = kids
            new_children.append(group.id)
        at.children = new_children

    # -- validation ---------------------------------------------------

    def validate(self, require_uniform_depth: bool = True) -> None:
        """Raise ValueError on any broken coding-tree invariant."""
        g = self.graph
        if self.root_id not in self.nodes:
            raise ValueError("missing root")
        root = self.nodes[self.root_id]
        if root.parent is not None or root.depth != 0:
            raise ValueError("root must have no parent and depth 0")
        seen = set()
        for nid in self.subtree_ids(self.root_id):
            if nid in seen:
                raise ValueError(f"node {nid} reachable twice")
            seen.add(nid)
        if seen != set(self.nodes):
            raise ValueError("nodes unreachable from the root")
        leaves = []
        for n in self.nodes.values():
            if n.parent is not None:
                p = self.nodes[n.parent]
                if n.id not in p.children:
                    raise ValueError(f"node {n.id} missing from parent's child list")
                if n.depth != p.depth + 1:
                    raise ValueError(f"node {n.id}: depth {n.depth} != parent depth + 1")
            if n.is_leaf():
                leaves.append(n)
            else:
                union = set()
                count = 0
                for c in n.children:
                    union |= self.nodes[c].subset
                    count += len(self.nodes[c].subset)
                if union != set(n.subset) or count != len(n.subset):
                    raise ValueError(f"node {n.id}: children do not partition its subset")
            if n.volume != subset_volume(g, n.subset):
                raise ValueError(f"node {n.id}: stale cached volume")
            if n.cut != cut_size(g, n.subset):
                raise ValueError(f"node {n.id}: stale cached cut")
        if root.cut != 0 or root.volume != g.volume:
            raise ValueError("root must mark the whole graph")
        marked = sorted(min(l.subset) for l in leaves if len(l.subset) == 1)
        if len(leaves) != g.node_count or any(len(l.subset) != 1 for l in leaves):
            raise ValueError("leaves do not biject with graph vertices")
        if marked != list(range(g.node_count)):
            raise ValueError("leaves do not cover every graph vertex exactly once")
        if require_uniform_depth:
            depths = {l.depth for l in leaves}
            if len(depths) != 1:
                raise ValueError(f"leaf depths not uniform: {sorted(depths)}")

    # -- serialization ------------------------------------------------

    def to_json_obj(self) -> dict:
        """{height, nodes:[...]} with leaves listed first in graph-vertex
        order, then internal nodes by ascending handle."""
        leaves = sorted(
            (n for n in self.nodes.values() if n.is_leaf()), key=lambda n: min(n.subset)
        )
        internal = sorted(
            (n for n in self.nodes.values() if not n.is_leaf()), key=lambda n: n.id
        )
        nodes = [
            {"id": n.id, "parent": n.parent, "children": list(n.children)}
            for n in leaves + internal
        ]
        return {"height": self.height, "nodes": nodes}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, graph: Graph, obj: dict) -> "CodingTree":
        tree = cls(graph)
        entries = obj["nodes"]
        vertex = 0
        roots = []
        for e in entries:
            node = TreeNode(e["id"], e["parent"], None, 0, 0, 0)
            node.children = list(e["children"])
            if not node.children:
                if vertex >= graph.node_count:
                    raise ValueError("more leaves than graph vertices")
                node.subset = frozenset({vertex})
                vertex += 1
            if node.parent is None:
                roots.append(node.id)
            tree.nodes[node.id] = node
        if vertex != graph.node_count:
            raise ValueError("leaf count does not match graph vertex count")
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        tree.root_id = roots[0]
        tree._next_id = max(tree.nodes) + 1
        # depths top-down, subsets and caches bottom-up
        stack = [(tree.root_id, 0)]
        order = []
        while stack:
            nid, d = stack.pop()
            tree.nodes[nid].depth = d
            order.append(nid)
            for c in tree.nodes[nid].children:
                stack.append((c, d + 1))
        for nid in reversed(order):
            n = tree.nodes[nid]
            if not n.is_leaf():
                s = frozenset().union(*(tree.nodes[c].subset for c in n.children))
                n.subset = s
            n.volume = subset_volume(graph, n.subset)
            n.cut = cut_size(graph, n.subset)
        tree.validate()
        return tree

    @classmethod
    def from_json(cls, graph: Graph, text: str) -> "CodingTree":
        return cls.from_json_obj(graph, json.loads(text))


def initial_tree(g: Graph) -> CodingTree:
    """Height-1 tree: every graph vertex as a leaf under a fresh root."""
    tree = CodingTree(g)
    for v in range(g.node_count):
        tree._alloc(None, frozenset({v}), g.degree[v], g.degree[v], 1)
    root = tree._alloc(None, frozenset(range(g.node_count)), g.volume, 0, 0)
    root.children = list(range(g.node_count))
    for v in range(g.node_count):
        tree.nodes[v].parent = root.id
    tree.root_id = root.id
    return tree


def structural_entropy(tree: CodingTree) -> float:
    return tree.structural_entropy()
