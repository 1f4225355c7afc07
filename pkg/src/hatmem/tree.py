"""Layered aggregate tree with cached upward re-aggregation.

The tree stores dialogue turns as leaves in its last layer. Every internal
node's text is the aggregate of its children's texts, and layer 0 always
holds the single root. Node (layer k, index i) has its parent at
(k-1, i // M), where M is the memory length. When the leaf layer is full
(M ** depth leaves), a new root layer is prepended and every existing layer
shifts down by one.

Re-aggregation after an insert walks from the new leaf's parent to the root.
Each node keeps a digest-keyed cache (`previous_complete_state`) mapping the
hash of its ordered child states to the text it aggregated under that state,
so a repeated child state never calls the aggregator again.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    ContractViolationError,
    DocumentParseError,
    InvalidParameterError,
    NotFoundError,
)

DOC_FORMAT = "hat-tree"
DOC_VERSION = 1


@dataclass
class Node:
    """One tree node; leaves carry raw turn text, internal nodes aggregates."""

    id: int
    layer: int
    index: int
    text: str = ""
    children: list[int] = field(default_factory=list)
    parent: Optional[int] = None
    previous_complete_state: dict[str, str] = field(default_factory=dict)
    meta: Optional[dict] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


class HatTree:
    """The layered tree plus its aggregator binding and call instrumentation.

    Writers must be exclusive: one insert or update at a time. Any number of
    readers may query a quiesced tree.
    """

    def __init__(self, memory_length: int, aggregator):
        # M=1 would put a single node on every layer and grow depth per leaf.
        if not isinstance(memory_length, int) or isinstance(memory_length, bool):
            raise InvalidParameterError("memory_length must be an integer")
        if memory_length < 2:
            raise InvalidParameterError(f"memory_length must be >= 2, got {memory_length}")
        self.memory_length = memory_length
        self.aggregator = aggregator
        self.layers: list[list[int]] = []
        self.nodes: dict[int, Node] = {}
        self.leaf_count = 0
        self.agg_call_count = 0
        self._next_id = 0

    # ------------------------------------------------------------------ reads

    def depth(self) -> int:
        if not self.layers:
            return 0
        return len(self.layers) - 1

    def layer_size(self, layer: int) -> int:
        if layer < 0 or layer >= len(self.layers):
            raise NotFoundError(f"layer {layer} out of range (depth {self.depth()})")
        return len(self.layers[layer])

    def node_at(self, layer: int, index: int) -> Node:
        if layer < 0 or layer >= len(self.layers):
            raise NotFoundError(f"layer {layer} out of range (depth {self.depth()})")
        row = self.layers[layer]
        if index < 0 or index >= len(row):
            raise NotFoundError(f"index {index} out of range in layer {layer} (size {len(row)})")
        return self.nodes[row[index]]

    def parent_of(self, node_id: int) -> Optional[Node]:
        node = self._node(node_id)
        if node.parent is None:
            return None
        return self.nodes[node.parent]

    def children_of(self, node_id: int) -> list[Node]:
        node = self._node(node_id)
        return [self.nodes[cid] for cid in node.children]

    def root(self) -> Node:
        if not self.layers:
            raise NotFoundError("tree is empty")
        return self.nodes[self.layers[0][0]]

    def root_text(self) -> str:
        return self.root().text

    def leaves(self) -> list[Node]:
        if not self.layers:
            return []
        return [self.nodes[nid] for nid in self.layers[-1]]

    def iter_nodes(self):
        for row in self.layers:
            for nid in row:
                yield self.nodes[nid]

    def _node(self, node_id: int) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise NotFoundError(f"no node with id {node_id}") from None

    # ----------------------------------------------------------------- writes

    def insert_leaf(self, text: str, meta: Optional[dict] = None) -> int:
        """Append one leaf and re-aggregate its ancestor chain.

        Grows a new root layer first when the leaf layer is at capacity.
        If aggregation fails the whole insert is rolled back and the tree,
        including its caches and counters, is left exactly as it was.
        """
        if not isinstance(text, str) or not text:
            raise InvalidParameterError("leaf text must be a nonempty string")
        undo: list[tuple] = []
        try:
            if not self.layers:
                # The root layer and the leaf layer appear with the first leaf.
                self.layers.append([])
                self.layers.append([])
                undo.append(("pop_layer",))
                undo.append(("pop_layer",))
            elif self.leaf_count == self.memory_length ** self.depth():
                self._grow_root(undo)
            leaf = self._place_leaf(text, meta, undo)
            self.leaf_count += 1
            undo.append(("dec_leaf_count",))
            self._update_chain(self.nodes[leaf.parent], undo)
            return leaf.id
        except BaseException:
            self._rollback(undo)
            raise

    def update_text(self, node_id: int) -> None:
        """Recompute one internal node from its children, then propagate up.

        A child-state digest already present in the node's cache restores the
        cached text without calling the aggregator; propagation continues to
        the root either way.
        """
        node = self._node(node_id)
        if node.is_leaf:
            raise ContractViolationError(f"update_text on leaf node {node_id}")
        undo: list[tuple] = []
        try:
            self._update_chain(node, undo)
        except BaseException:
            self._rollback(undo)
            raise

    # -------------------------------------------------------------- internals

    def _new_node(self, layer: int, index: int, undo: list, text: str = "",
                  meta: Optional[dict] = None) -> Node:
        node = Node(id=self._next_id, layer=layer, index=index, text=text,
                    meta=dict(meta) if meta else None)
        self._next_id += 1
        self.nodes[node.id] = node
        self.layers[layer].append(node.id)
        undo.append(("del_node", node.id))
        return node

    def _grow_root(self, undo: list) -> None:
        # One "ungrow" entry reverses the whole step; it is recorded before
        # any later node creations so rollback unwinds those first.
        old_root = self.nodes[self.layers[0][0]]
        for node in self.nodes.values():
            node.layer += 1
        self.layers.insert(0, [])
        new_root = Node(id=self._next_id, layer=0, index=0)
        self._next_id += 1
        self.nodes[new_root.id] = new_root
        self.layers[0].append(new_root.id)
        new_root.children.append(old_root.id)
        old_root.parent = new_root.id
        undo.append(("ungrow", new_root.id, old_root.id))

    def _place_leaf(self, text: str, meta: Optional[dict], undo: list) -> Node:
        d = self.depth()
        leaf = self._new_node(layer=d, index=len(self.layers[d]), undo=undo,
                              text=text, meta=meta)
        child = leaf
        for k in range(d - 1, -1, -1):
            j = child.index // self.memory_length
            row = self.layers[k]
            if j < len(row):
                parent = self.nodes[row[j]]
                parent.children.append(child.id)
                child.parent = parent.id
                undo.append(("unlink", parent.id, child.id))
                break
            # Missing ancestors are always the next contiguous slot.
            parent = self._new_node(layer=k, index=j, undo=undo)
            parent.children.append(child.id)
            child.parent = parent.id
            child = parent
        return leaf

    def _child_digest(self, node: Node) -> str:
        h = hashlib.sha256()
        for cid in node.children:
            text_hash = hashlib.sha256(self.nodes[cid].text.encode("utf-8")).hexdigest()
            h.update(f"{cid}:{text_hash};".encode("ascii"))
        return h.hexdigest()

    def _update_chain(self, node: Node, undo: list) -> None:
        current: Optional[Node] = node
        while current is not None:
            digest = self._child_digest(current)
            cached = current.previous_complete_state.get(digest)
            if cached is None:
                texts = [self.nodes[cid].text for cid in current.children]
                result = self.aggregator.aggregate(texts)
                undo.append(("set_text", current.id, current.text))
                undo.append(("del_cache", current.id, digest))
                undo.append(("dec_agg_count",))
                current.text = result
                current.previous_complete_state[digest] = result
                self.agg_call_count += 1
            elif cached != current.text:
                undo.append(("set_text", current.id, current.text))
                current.text = cached
            current = self.nodes[current.parent] if current.parent is not None else None

    def _rollback(self, undo: list) -> None:
        for entry in reversed(undo):
            op = entry[0]
            if op == "set_text":
                self.nodes[entry[1]].text = entry[2]
            elif op == "del_cache":
                self.nodes[entry[1]].previous_complete_state.pop(entry[2], None)
            elif op == "dec_agg_count":
                self.agg_call_count -= 1
            elif op == "dec_leaf_count":
                self.leaf_count -= 1
            elif op == "unlink":
                parent = self.nodes[entry[1]]
                parent.children.remove(entry[2])
                self.nodes[entry[2]].parent = None
            elif op == "del_node":
                node = self.nodes.pop(entry[1])
                self.layers[node.layer].remove(entry[1])
            elif op == "ungrow":
                new_root_id, old_root_id = entry[1], entry[2]
                # Later creations were already unwound, so layer 0 holds only
                # the new root by now.
                self.nodes.pop(new_root_id)
                self.layers.pop(0)
                self.nodes[old_root_id].parent = None
                for node in self.nodes.values():
                    node.layer -= 1
            elif op == "pop_layer":
                self.layers.pop()

    # ------------------------------------------------------------ persistence

    def serialize(self) -> str:
        """Stable JSON document; identical trees serialize byte-identically."""
        layers_doc = []
        for row in self.layers:
            layer_doc = []
            for nid in row:
                node = self.nodes[nid]
                layer_doc.append({
                    "id": node.id,
                    "text": node.text,
                    "children": list(node.children),
                    "meta": node.meta,
                    "cache": dict(node.previous_complete_state),
                })
            layers_doc.append(layer_doc)
        doc = {
            "format": DOC_FORMAT,
            "version": DOC_VERSION,
            "memory_length": self.memory_length,
            "leaf_count": self.leaf_count,
            "aggregator": self.aggregator.spec(),
            "layers": layers_doc,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def deserialize(cls, document: str, aggregator=None) -> "HatTree":
        """Rebuild a tree from `serialize` output.

        Structure, texts, meta, and caches round-trip; agg_call_count resets
        to 0. With aggregator=None the aggregator is rebuilt from the
        document's recorded kind and params.
        """
        from .aggregation import aggregator_from_spec

        try:
            doc = json.loads(document)
        except (TypeError, ValueError) as exc:
            raise DocumentParseError(f"not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != DOC_FORMAT:
            raise DocumentParseError("missing or wrong format marker")
        if doc.get("version") != DOC_VERSION:
            raise DocumentParseError(f"unsupported document version {doc.get('version')!r}")
        memory_length = doc.get("memory_length")
        if not isinstance(memory_length, int) or memory_length < 2:
            raise DocumentParseError(f"bad memory_length {memory_length!r}")
        layers_doc = doc.get("layers")
        if not isinstance(layers_doc, list) or not all(isinstance(r, list) for r in layers_doc):
            raise DocumentParseError("layers must be a list of lists")

        agg_spec = doc.get("aggregator")
        if not isinstance(agg_spec, dict) or "kind" not in agg_spec:
            raise DocumentParseError("missing aggregator spec")
        if aggregator is None:
            try:
                aggregator = aggregator_from_spec(agg_spec["kind"], agg_spec.get("params") or {})
            except InvalidParameterError as exc:
                raise DocumentParseError(str(exc)) from exc
        elif aggregator.spec() != agg_spec:
            raise DocumentParseError(
                f"aggregator mismatch: document has {agg_spec!r}, caller bound {aggregator.spec()!r}")

        tree = cls(memory_length, aggregator)
        for k, row in enumerate(layers_doc):
            tree.layers.append([])
            for i, entry in enumerate(row):
                if not isinstance(entry, dict):
                    raise DocumentParseError(f"node at layer {k} index {i} is not an object")
                node = Node(
                    id=_expect(entry, "id", int, k, i),
                    layer=k,
                    index=i,
                    text=_expect(entry, "text", str, k, i),
                    children=_expect(entry, "children", list, k, i),
                    meta=entry.get("meta"),
                    previous_complete_state=_expect(entry, "cache", dict, k, i),
                )
                if node.id in tree.nodes:
                    raise DocumentParseError(f"duplicate node id {node.id}")
                for key, value in node.previous_complete_state.items():
                    if not isinstance(key, str) or not isinstance(value, str):
                        raise DocumentParseError(
                            f"node at layer {k} index {i}: cache entries must map string to string")
                tree.nodes[node.id] = node
                tree.layers[k].append(node.id)
        tree._validate_structure(doc.get("leaf_count"))
        tree.leaf_count = doc["leaf_count"]
        tree._next_id = max(tree.nodes) + 1 if tree.nodes else 0
        return tree

    def _validate_structure(self, leaf_count) -> None:
        if not self.layers:
            if leaf_count != 0:
                raise DocumentParseError("leaf_count nonzero for empty tree")
            return
        if len(self.layers[0]) != 1:
            raise DocumentParseError(f"layer 0 must hold exactly one node, found {len(self.layers[0])}")
        if leaf_count != len(self.layers[-1]):
            raise DocumentParseError(
                f"leaf_count {leaf_count!r} does not match leaf layer size {len(self.layers[-1])}")
        d = self.depth()
        M = self.memory_length
        for k, row in enumerate(self.layers):
            if len(row) > M ** k:
                raise DocumentParseError(f"layer {k} exceeds capacity {M ** k}")
            for i, nid in enumerate(row):
                node = self.nodes[nid]
                if k < d:
                    # Internal node: children must be exactly the layer-(k+1)
                    # slots that map to index i under floor division by M.
                    below = self.layers[k + 1]
                    expected = [below[j] for j in range(i * M, min((i + 1) * M, len(below)))]
                    if node.children != expected:
                        raise DocumentParseError(
                            f"node at layer {k} index {i}: children {node.children} "
                            f"violate the floor(i/M) parent rule (expected {expected})")
                    if not expected:
                        raise DocumentParseError(f"internal node at layer {k} index {i} has no children")
                    for cid in expected:
                        self.nodes[cid].parent = nid
                else:
                    if node.children:
                        raise DocumentParseError(f"leaf at index {i} has children")
        if leaf_count >= 2:
            want = math.ceil(math.log(leaf_count, M))
            # ceil(log) is float-based; correct it at exact powers.
            while M ** want < leaf_count:
                want += 1
            while want > 1 and M ** (want - 1) >= leaf_count:
                want -= 1
            if d != want:
                raise DocumentParseError(f"depth {d} inconsistent with {leaf_count} leaves (want {want})")
        elif d not in (0, 1):
            raise DocumentParseError(f"depth {d} inconsistent with {leaf_count} leaves")


def _expect(entry: dict, key: str, typ, layer: int, index: int):
    value = entry.get(key)
    if not isinstance(value, typ) or isinstance(value, bool):
        raise DocumentParseError(
            f"node at layer {layer} index {index}: field {key!r} missing or not {typ.__name__}")
    return value
