"""Graph-manifold descriptions: blocks (surface x line) glued along flat walls.

A manifold file lists blocks, each carrying a hyperbolic surface with
geodesic boundary, and edges pairing boundary classes of blocks.  Each edge
carries the wall angle between the two adjacent blocks' fiber directions and
the affine offsets of the gluing; together these define a plane isometry
between the two sides' wall coordinates (u = arc-length along the boundary
line, r = the block's line coordinate).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import surface as sf


class ManifoldParseError(ValueError):
    """Raised for malformed description files (CLI exit code 2)."""


@dataclass
class BlockSpec:
    block_id: str
    surface: sf.FuchsianSurface
    fiber_length: float = None  # metadata only, not used in computations


@dataclass(frozen=True)
class BoundaryRef:
    block_id: str
    class_id: int


@dataclass
class EdgeSpec:
    edge_id: str
    end_a: BoundaryRef
    end_b: BoundaryRef
    alpha: float  # wall angle, radians
    flip: bool = False
    offset_u: float = 0.0
    offset_r: float = 0.0

    def other_end(self, ref: BoundaryRef) -> BoundaryRef:
        if ref == self.end_a:
            return self.end_b
        if ref == self.end_b:
            return self.end_a
        raise KeyError("edge %s does not touch %r" % (self.edge_id, ref))

    def side_of(self, ref: BoundaryRef) -> str:
        if ref == self.end_a:
            return "a"
        if ref == self.end_b:
            return "b"
        raise KeyError("edge %s does not touch %r" % (self.edge_id, ref))


@dataclass
class ManifoldSpec:
    blocks: list
    edges: list
    alpha_0: float = field(init=False)
    _by_block: dict = field(init=False, repr=False)
    _edge_of: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.alpha_0 = min((e.alpha for e in self.edges), default=float("nan"))
        self._by_block = {b.block_id: b for b in self.blocks}
        self._edge_of = {}
        for e in self.edges:
            for ref in (e.end_a, e.end_b):
                self._edge_of.setdefault(ref, []).append(e)

    def block(self, block_id) -> BlockSpec:
        return self._by_block[block_id]

    def edge_at(self, ref: BoundaryRef) -> EdgeSpec:
        edges = self._edge_of.get(ref, [])
        if len(edges) != 1:
            raise KeyError("boundary %r is not matched by exactly one edge" % (ref,))
        return edges[0]

    def boundary_refs(self):
        return [
            BoundaryRef(b.block_id, c.class_id)
            for b in self.blocks
            for c in b.surface.boundary_classes
        ]


@dataclass
class ValidationReport:
    valid: bool
    diagnostics: list
    alpha_0: float = float("nan")
    l0_empirical: float = float("nan")
    block_gaps: dict = field(default_factory=dict)

    def __str__(self):
        lines = ["valid" if self.valid else "INVALID"]
        lines += ["  - " + d for d in self.diagnostics]
        if self.valid:
            lines.append("  alpha_0 = %.12g rad" % self.alpha_0)
            lines.append("  empirical l0 (min boundary gap) = %.12g" % self.l0_empirical)
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# parsing


def _build_surface(desc, where):
    if not isinstance(desc, dict) or "type" not in desc:
        raise ManifoldParseError("%s: surface must be an object with a 'type'" % where)
    if desc["type"] == "pants":
        lengths = desc.get("lengths")
        if not (isinstance(lengths, list) and len(lengths) == 3):
            raise ManifoldParseError("%s: pants surface needs 'lengths': [L1,L2,L3]" % where)
        try:
            return sf.build_pants(sf.PantsParams(*map(float, lengths)))
        except (TypeError, ValueError) as exc:
            raise ManifoldParseError("%s: %s" % (where, exc))
    if desc["type"] == "generators":
        try:
            return sf.surface_from_generators(
                [np.asarray(m, dtype=float) for m in desc["matrices"]],
                [tuple(w) for w in desc["boundary_words"]],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifoldParseError("%s: %s" % (where, exc))
    raise ManifoldParseError("%s: unknown surface type %r" % (where, desc["type"]))


def _ref(obj, where):
    if not isinstance(obj, dict) or "block" not in obj or "class" not in obj:
        raise ManifoldParseError("%s: boundary reference needs 'block' and 'class'" % where)
    return BoundaryRef(str(obj["block"]), int(obj["class"]))


def load_manifold(path_or_dict) -> ManifoldSpec:
    """Parse a manifold description (JSON path, file-like, or dict).

    Angles are degrees in files, radians internally.  Structural problems
    raise ManifoldParseError; semantic ones are left for validate().
    """
    if isinstance(path_or_dict, dict):
        data = path_or_dict
    else:
        try:
            if hasattr(path_or_dict, "read"):
                data = json.load(path_or_dict)
            else:
                with open(path_or_dict) as fh:
                    data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifoldParseError("invalid JSON: %s" % exc)
    if not isinstance(data, dict):
        raise ManifoldParseError("top level must be an object")
    blocks = []
    for i, b in enumerate(data.get("blocks", [])):
        where = "blocks[%d]" % i
        if "id" not in b:
            raise ManifoldParseError("%s: missing 'id'" % where)
        blocks.append(
            BlockSpec(
                block_id=str(b["id"]),
                surface=_build_surface(b.get("surface"), where),
                fiber_length=float(b["fiber_length"]) if "fiber_length" in b else None,
            )
        )
    edges = []
    for i, e in enumerate(data.get("edges", [])):
        where = "edges[%d]" % i
        for k in ("id", "a", "b", "alpha_deg"):
            if k not in e:
                raise ManifoldParseError("%s: missing '%s'" % (where, k))
        edges.append(
            EdgeSpec(
                edge_id=str(e["id"]),
                end_a=_ref(e["a"], where),
                end_b=_ref(e["b"], where),
                alpha=math.radians(float(e["alpha_deg"])),
                flip=bool(e.get("flip", False)),
                offset_u=float(e.get("offset_u", 0.0)),
                offset_r=float(e.get("offset_r", 0.0)),
            )
        )
    return ManifoldSpec(blocks, edges)


# ---------------------------------------------------------------------------
# validation


def validate(spec: ManifoldSpec) -> ValidationReport:
    """Check gluing and angle invariants; compute alpha_0 and the empirical l0."""
    diags = []
    if not spec.edges:
        diags.append("no edges: the graph-manifold structure is trivial")
    by_ref = {}
    for e in spec.edges:
        if e.end_a == e.end_b:
            diags.append(
                "edge %s joins boundary %r to itself (no two-sided wall convention)"
                % (e.edge_id, e.end_a)
            )
        if not (0.0 < e.alpha <= math.pi / 2.0 + 1e-12):
            diags.append(
                "edge %s: wall angle %.6g rad outside (0, pi/2]" % (e.edge_id, e.alpha)
            )
        for ref in (e.end_a, e.end_b):
            if ref.block_id not in spec._by_block:
                diags.append("edge %s: unknown block %r" % (e.edge_id, ref.block_id))
                continue
            surf = spec.block(ref.block_id).surface
            if not any(c.class_id == ref.class_id for c in surf.boundary_classes):
                diags.append(
                    "edge %s: block %s has no boundary class %d"
                    % (e.edge_id, ref.block_id, ref.class_id)
                )
                continue
            by_ref.setdefault(ref, []).append(e.edge_id)
    for ref in spec.boundary_refs():
        n = len(by_ref.get(ref, []))
        if n == 0:
            diags.append("boundary (block %s, class %d) is unmatched" % (ref.block_id, ref.class_id))
        elif n > 1:
            diags.append(
                "boundary (block %s, class %d) appears in %d edge ends"
                % (ref.block_id, ref.class_id, n)
            )
    if diags:
        return ValidationReport(False, diags)
    gaps = {b.block_id: sf.min_boundary_gap(b.surface) for b in spec.blocks}
    return ValidationReport(
        True, [], alpha_0=spec.alpha_0, l0_empirical=min(gaps.values()), block_gaps=gaps
    )


# ---------------------------------------------------------------------------
# wall-coordinate transitions


def _transition_matrix(edge: EdgeSpec):
    c, s = math.cos(edge.alpha), math.sin(edge.alpha)
    m = np.array([[c, -s], [s, c]])
    if edge.flip:
        m = np.diag([1.0, -1.0]) @ m
    return m


def transition_apply(edge: EdgeSpec, from_end: str, coords):
    """Map wall coordinates (u, r) across an edge.

    Direction "a": applies T(x) = F R(alpha) x + (offset_u, offset_r);
    direction "b": applies the inverse map.
    """
    x = np.asarray(coords, dtype=float)
    m = _transition_matrix(edge)
    off = np.array([edge.offset_u, edge.offset_r])
    if from_end == "a":
        y = m @ x + off
    elif from_end == "b":
        y = m.T @ (x - off)
    else:
        raise ValueError("from_end must be 'a' or 'b'")
    return float(y[0]), float(y[1])


def two_pants_example() -> dict:
    """The bundled minimal example: two pants(2,2,2) blocks, three walls."""
    return {
        "blocks": [
            {"id": "P", "surface": {"type": "pants", "lengths": [2, 2, 2]}},
            {"id": "Q", "surface": {"type": "pants", "lengths": [2, 2, 2]}},
        ],
        "edges": [
            {
                "id": "e%d" % k,
                "a": {"block": "P", "class": k},
                "b": {"block": "Q", "class": k},
                "alpha_deg": 90,
                "flip": False,
                "offset_u": 0.0,
                "offset_r": 0.0,
            }
            for k in (1, 2, 3)
        ],
    }
