"""Link grounded situations of one image into a relation graph.

Roles in distinct situation nodes are connected by a spatial edge when
their groundings overlap enough, and by a semantic edge when they name
the same non-null noun. Place roles are never grounded so they only form
semantic edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .frame_model import NULL_NOUN, BoundingBox, GroundedFrame
from .geometry import iou

DEFAULT_SPATIAL_IOU = 0.4  # below the 0.5 metric threshold: boxes for the
# same entity can come from different conditional passes


@dataclass(frozen=True)
class SituationNode:
    frame: GroundedFrame
    query_box: Optional[BoundingBox] = None


@dataclass(frozen=True)
class ChainEdge:
    node_i: int
    role_a: str
    node_j: int
    role_b: str
    link_type: str  # "spatial" or "semantic"
    strength: float  # 1 + IoU for spatial, 1 for semantic


@dataclass(frozen=True)
class ChainGraph:
    nodes: tuple  # of SituationNode
    edges: tuple  # of ChainEdge, deterministic order

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "verb": n.frame.verb,
                    "nouns": dict(n.frame.role_values),
                    "boxes": {
                        role: (box.as_list() if box else None)
                        for (role, _), box in zip(n.frame.role_values, n.frame.groundings)
                    },
                    "query_box": n.query_box.as_list() if n.query_box else None,
                }
                for n in self.nodes
            ],
            "edges": [
                {
                    "node_i": e.node_i, "role_a": e.role_a,
                    "node_j": e.node_j, "role_b": e.role_b,
                    "type": e.link_type, "strength": e.strength,
                }
                for e in self.edges
            ],
        }


def chain(nodes: list, spatial_iou: float = DEFAULT_SPATIAL_IOU,
          require_noun_match: bool = False) -> ChainGraph:
    """Build the undirected relation graph over a list of SituationNodes.

    For every role pair across distinct nodes: a spatial edge when both
    are grounded with IoU >= spatial_iou (strength 1 + IoU), a semantic
    edge when the nouns are equal and non-null (strength 1). Each
    unordered pair appears once, ordered by (node_i, role position).
    require_noun_match additionally gates spatial edges on noun equality.
    """
    if not nodes:
        raise ValueError("chain requires at least one node")
    edges = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            fi, fj = nodes[i].frame, nodes[j].frame
            for ai, (role_a, noun_a) in enumerate(fi.role_values):
                for bj, (role_b, noun_b) in enumerate(fj.role_values):
                    box_a, box_b = fi.groundings[ai], fj.groundings[bj]
                    nouns_equal = noun_a == noun_b and noun_a != NULL_NOUN
                    if box_a is not None and box_b is not None:
                        if not require_noun_match or nouns_equal:
                            overlap = iou(box_a, box_b)
                            if overlap >= spatial_iou:
                                edges.append(
                                    ChainEdge(i, role_a, j, role_b, "spatial", 1.0 + overlap)
                                )
                    if nouns_equal:
                        edges.append(ChainEdge(i, role_a, j, role_b, "semantic", 1.0))
    return ChainGraph(tuple(nodes), tuple(edges))
