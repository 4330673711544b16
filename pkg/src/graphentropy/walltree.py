"""Level-by-level expansion of the wall tree of the universal cover.

Nodes are walls; a node's state describes the observer configuration in the
block BEYOND its wall, produced by transporting the in-block expansion data
across the edge gluing.  Accumulated lengths follow the recurrence
L_child = L_parent - l + l~ - delta, which over-estimates the true distance
from the base point to the child wall while shrinking by a factor < 1 per
level once the gain functional exceeds 1.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import hyperboloid as hyp
from . import local_estimate as le
from . import manifold as mf
from . import surface as sf


@dataclass
class WallNode:
    node_id: int
    parent: "WallNode | None"
    block_id: str               # block the state expands into (beyond the wall)
    edge_id: str | None
    state: le.ExpansionState
    # own-side geometry of this node's wall, in the parent block's cover
    own_class: int = 0
    own_u: float = 0.0
    own_r: float = 0.0
    own_line: hyp.HLine = None
    own_origin: np.ndarray = None

    @property
    def depth(self):
        return self.state.depth

    @property
    def L(self):
        return self.state.L


@dataclass
class LevelSummary:
    n: int
    node_count: int
    p_hat: dict                    # evaluation exponent t -> sum of e^{-t L}
    lambda_min_observed: float     # nan at level 0
    truncated: bool
    stabilized: bool
    psi_tail: float = 0.0          # reported tail of the angle sum (level 0)


def root_states(manifold: mf.ManifoldSpec, root_block, root_class, u0=0.0, r0=0.0):
    """Depth-0 state: base point ON the root wall of the chosen block."""
    block = manifold.block(root_block)
    block.surface.boundary_class(root_class)  # raises KeyError if absent
    return le.ExpansionState(
        block.surface, root_class, u=float(u0), r=float(r0), l=0.0, L=0.0, depth=0
    )


def make_root_node(manifold, root_block, root_class, u0=0.0, r0=0.0) -> WallNode:
    return WallNode(
        node_id=0,
        parent=None,
        block_id=root_block,
        edge_id=None,
        state=root_states(manifold, root_block, root_class, u0, r0),
    )


SCALE_CAP = 4.0  # height beyond which the cutoff scaling saturates


def _effective_eps(eps, l, scale_eps):
    """Optionally shrink the cutoff with the observer's total visual angle.

    At height l the visible walls subtend angles of order e^{-l}; scaling the
    cutoff keeps the relative tail of each expansion comparable across
    heights, at the price of a deeper line cache.  The scaling saturates at
    SCALE_CAP so the cache radius stays bounded; rarer, higher observers are
    simply expanded less completely, which only undercounts.
    """
    return eps * hyp.visual_angle(min(l, SCALE_CAP)) / math.pi if scale_eps else eps


def expand_node(node: WallNode, manifold: mf.ManifoldSpec, eps, depth_cap=64, l0=None,
                scale_eps=False):
    """Children of one node: one wall node per visible wall.

    Returns (children, stabilized).  l0, when given, is the empirical
    minimum boundary gap; every child's incoming segment must exceed it.
    """
    state = node.state
    cb = le.expand_arrays(state, _effective_eps(eps, state.l, scale_eps), depth_cap)
    cache = state.surface.cache()
    b = cb.batch
    children = []
    for k in range(len(cb)):
        ref = mf.BoundaryRef(node.block_id, int(b.class_ids[k]))
        edge = manifold.edge_at(ref)
        side = edge.side_of(ref)
        far = edge.other_end(ref)
        u2, r2 = mf.transition_apply(edge, side, (float(b.foot_offsets[k]), state.r))
        far_surface = manifold.block(far.block_id).surface
        u2 = math.fmod(u2, far_surface.boundary_class(far.class_id).translation_length)
        if u2 < 0:
            u2 += far_surface.boundary_class(far.class_id).translation_length
        l_child = float(cb.l_second[k])
        if l0 is not None and state.depth >= 1 and l_child < l0 - 1e-3:
            raise AssertionError(
                "child segment %.6g below the boundary gap %.6g" % (l_child, l0)
            )
        child_state = le.ExpansionState(
            surface=manifold.block(far.block_id).surface,
            attach_class=far.class_id,
            u=u2,
            r=r2,
            l=l_child,
            alpha=edge.alpha,
            L=float(state.L - state.l + cb.l_tilde[k] - cb.delta[k]),
            depth=state.depth + 1,
        )
        i = b.cache_index[k]
        children.append(
            WallNode(
                node_id=-1,  # assigned by build_levels
                parent=node,
                block_id=far.block_id,
                edge_id=edge.edge_id,
                state=child_state,
                own_class=int(b.class_ids[k]),
                own_u=float(b.foot_offsets[k]),
                own_r=state.r,
                own_line=hyp.HLine(cache.polars[i]),
                own_origin=cache.origins[i],
            )
        )
    return children, cb.stabilized


@dataclass
class Frontier:
    """One level of the wall tree in packed array form."""

    block_idx: np.ndarray  # index into manifold.blocks
    class_id: np.ndarray
    u: np.ndarray
    r: np.ndarray
    l: np.ndarray
    alpha: np.ndarray
    L: np.ndarray

    def __len__(self):
        return len(self.L)

    def state(self, manifold, k):
        blk = manifold.blocks[int(self.block_idx[k])]
        return le.ExpansionState(
            surface=blk.surface,
            attach_class=int(self.class_id[k]),
            u=float(self.u[k]),
            r=float(self.r[k]),
            l=float(self.l[k]),
            alpha=float(self.alpha[k]),
            L=float(self.L[k]),
        )


def _transition_tables(manifold):
    """Per (block, class): far block index, far class, alpha, 2x2 map, offset."""
    index_of = {b.block_id: i for i, b in enumerate(manifold.blocks)}
    tables = {}
    for bi, b in enumerate(manifold.blocks):
        for c in b.surface.boundary_classes:
            ref = mf.BoundaryRef(b.block_id, c.class_id)
            edge = manifold.edge_at(ref)
            side = edge.side_of(ref)
            m = mf._transition_matrix(edge)
            off = np.array([edge.offset_u, edge.offset_r])
            if side == "b":
                m, off = m.T, -(m.T @ off)
            far = edge.other_end(ref)
            far_surface = manifold.block(far.block_id).surface
            far_len = far_surface.boundary_class(far.class_id).translation_length
            tables[(bi, c.class_id)] = (
                index_of[far.block_id], far.class_id, edge.alpha, m, off, far_len
            )
    return tables


def build_levels(
    manifold: mf.ManifoldSpec,
    root_block,
    root_class,
    n_max,
    eps,
    beam=None,
    u0=0.0,
    r0=0.0,
    t_values=(1.0,),
    depth_cap=64,
    max_nodes=2_000_000,
    check_l0=True,
    scale_eps=False,
    return_level_L=False,
):
    """Expand the wall tree to level n_max; level n holds walls at depth n+1.

    Returns (summaries, frontier).  With a beam, only the `beam` smallest-L
    nodes of each level are expanded further; the level sums then undercount,
    which is sound for lower bounds, and the summaries are flagged truncated.
    With return_level_L the full (pre-prune) L array of the last completed
    level is returned as a third element, for sums at arbitrary exponents;
    in that mode the final level skips the child-state columns to bound
    memory and the frontier slot of the return value is None.
    """
    if beam is not None and beam < 1:
        raise ValueError("beam must be >= 1 when given")
    l0 = None
    if check_l0:
        l0 = min(sf.min_boundary_gap(b.surface) for b in manifold.blocks)
    tables = _transition_tables(manifold)
    index_of = {b.block_id: i for i, b in enumerate(manifold.blocks)}
    if root_block not in index_of:
        raise KeyError("unknown root block %r" % (root_block,))
    root_states(manifold, root_block, root_class, u0, r0)  # validates the ref
    frontier = Frontier(
        block_idx=np.array([index_of[root_block]]),
        class_id=np.array([int(root_class)]),
        u=np.array([float(u0)]),
        r=np.array([float(r0)]),
        l=np.array([0.0]),
        alpha=np.array([math.pi / 2.0]),
        L=np.array([0.0]),
    )
    summaries = []
    truncated_ever = False
    last_level_L = np.zeros(0)
    for n in range(n_max + 1):
        # the final level of a sum-only run needs no child states
        light = return_level_L and n == n_max
        keys = (
            ("L", "parent")
            if light
            else ("block_idx", "class_id", "u", "r", "l", "alpha", "L", "parent")
        )
        cols = {k: [] for k in keys}
        stabilized = True
        psi_sum = 0.0
        group_key = frontier.block_idx * 1000 + frontier.class_id
        for gk in np.unique(group_key):
            gi = np.nonzero(group_key == gk)[0]
            bi = int(frontier.block_idx[gi[0]])
            cid0 = int(frontier.class_id[gi[0]])
            surface = manifold.blocks[bi].surface
            gl = frontier.l[gi]
            eps_eff = np.full(len(gi), eps)
            if scale_eps:
                eps_eff *= hyp.visual_angle(np.minimum(gl, SCALE_CAP)) / math.pi
            cutoff = -np.log(np.tan(eps_eff / 4.0))
            sr = sf.sight_rows(surface, cid0, frontier.u[gi], gl, cutoff, depth_cap)
            stabilized = stabilized and sr["stabilized"]
            rows = sr["rows"]
            l_tilde = sr["l_tilde"]
            lp = gl[rows]
            live = lp > 0
            l_second = l_tilde.copy()
            delta = np.zeros_like(l_tilde)
            if live.any():
                # crossing with the attaching line, then the fiber offset and
                # the product-metric shortcut gain, as in the single-node path
                o = sr["observer"][rows[live]]
                feet = sr["feet"][live]
                lt = l_tilde[live]
                v = (feet - np.cosh(lt)[:, None] * o) / np.sinh(lt)[:, None]
                vp = hyp.mdot(v, sr["frame_p"])
                sigma = np.arctanh(np.sinh(lp[live]) / vp)
                t_w = np.cosh(sigma)[:, None] * o + np.sinh(sigma)[:, None] * v
                d = np.abs(np.arcsinh(hyp.mdot(t_w, sr["frame_t"][rows[live]])))
                l_second[live] = lt - sigma
                delta[live] = hyp.delta_correction(
                    lp[live], d, frontier.alpha[gi][rows[live]]
                )
                if l0 is not None and float(np.min(l_second[live])) < l0 - 1e-3:
                    raise AssertionError("child segment below the boundary gap")
            if not light:
                ids = sr["class_ids"]
                far_bi = np.empty(len(ids), dtype=np.int64)
                far_cls = np.empty(len(ids), dtype=np.int64)
                alphas = np.empty(len(ids))
                u2 = np.empty(len(ids))
                r2 = np.empty(len(ids))
                rr_all = frontier.r[gi][rows]
                for cid in np.unique(ids):
                    fb, fc, alpha, m, off, far_len = tables[(bi, int(cid))]
                    sel = ids == cid
                    far_bi[sel] = fb
                    far_cls[sel] = fc
                    alphas[sel] = alpha
                    uu = sr["foot_offsets"][sel]
                    rr = rr_all[sel]
                    # reduce u by the far class period: a deck shift that maps
                    # the child subtree isometrically and keeps the cache
                    # radius bounded
                    u2[sel] = np.mod(m[0, 0] * uu + m[0, 1] * rr + off[0], far_len)
                    r2[sel] = m[1, 0] * uu + m[1, 1] * rr + off[1]
                cols["block_idx"].append(far_bi)
                cols["class_id"].append(far_cls)
                cols["u"].append(u2)
                cols["r"].append(r2)
                cols["alpha"].append(alphas)
                cols["l"].append(l_second)
            cols["L"].append(frontier.L[gi][rows] - lp + l_tilde - delta)
            cols["parent"].append(gi[rows])
            if n == 0:
                psi_sum += float(np.sum(sr["psi"]))
        if not cols["L"]:
            break
        arr = {k: np.concatenate(v) for k, v in cols.items()}
        last_level_L = arr["L"]
        order = np.argsort(arr["L"], kind="stable")
        arr = {k: v[order] for k, v in arr.items()}
        count = len(arr["L"])
        n_keep = count
        truncated = False
        if beam is not None and count > beam:
            n_keep = beam
            truncated = True
        if n_keep > max_nodes:
            n_keep = max_nodes
            truncated = True
        truncated_ever = truncated_ever or truncated or not stabilized
        # per-parent gain over the children actually retained
        lam_min = float("nan")
        parent_l = frontier.l[arr["parent"][:n_keep]]
        live = parent_l > 0
        if live.any():
            gains = np.exp(frontier.L[arr["parent"][:n_keep]] - arr["L"][:n_keep])
            acc = np.zeros(len(frontier))
            np.add.at(acc, arr["parent"][:n_keep][live], gains[live])
            expanded = np.zeros(len(frontier), dtype=bool)
            expanded[arr["parent"][:n_keep][live]] = True
            lam_min = float(acc[expanded].min())
        summaries.append(
            LevelSummary(
                n=n,
                node_count=count,
                p_hat={
                    float(t): float(np.sum(np.exp(-float(t) * arr["L"])))
                    for t in t_values
                },
                lambda_min_observed=lam_min,
                truncated=truncated_ever,
                stabilized=stabilized,
                psi_tail=(max(0.0, (math.pi - psi_sum) / 4.0) if n == 0 else 0.0),
            )
        )
        if light:
            frontier = None
            break
        frontier = Frontier(
            block_idx=arr["block_idx"][:n_keep],
            class_id=arr["class_id"][:n_keep],
            u=arr["u"][:n_keep],
            r=arr["r"][:n_keep],
            l=arr["l"][:n_keep],
            alpha=arr["alpha"][:n_keep],
            L=arr["L"][:n_keep],
        )
        if n < n_max and beam is None and count * 8 > max_nodes:
            # another no-beam level would blow the node budget: stop early
            summaries[-1].truncated = True
            truncated_ever = True
            break
    if return_level_L:
        return summaries, frontier, last_level_L
    return summaries, frontier


LEVELS_COLUMNS = ("n", "count", "t", "p_hat", "lambda_min", "truncated")


def levels_to_csv(summaries):
    out = io.StringIO()
    out.write(",".join(LEVELS_COLUMNS) + "\n")
    for s in summaries:
        for t in sorted(s.p_hat):
            out.write(
                "%d,%d,%.17g,%.17g,%.17g,%d\n"
                % (s.n, s.node_count, t, s.p_hat[t], s.lambda_min_observed, int(s.truncated))
            )
    return out.getvalue()


# ---------------------------------------------------------------------------
# distance oracle


def _ancestor_chain(node: WallNode):
    chain = []
    cur = node
    while cur.parent is not None:
        chain.append(cur)
        cur = cur.parent
    chain.reverse()
    return cur, chain  # (root, walls w_1..w_m)


def distance_lower_bound_check(node: WallNode, manifold: mf.ManifoldSpec, samples=8):
    """Numerically minimize path length from the base point to the node's wall.

    The minimization runs over one crossing point (arc, height) per
    intermediate wall plus the endpoint on the target wall; the broken
    geodesic construction guarantees the true distance is <= the stored L.
    Returns the oracle distance (an upper bound for the true distance, so
    oracle <= L + tol certifies soundness of L at this node).
    """
    from scipy import optimize

    root, walls = _ancestor_chain(node)
    m = len(walls)
    if m == 0:
        raise ValueError("the root node has no wall path")
    if m > 3:
        raise ValueError("oracle restricted to depth <= 3")
    states = [root.state] + [w.state for w in walls]
    edges = [manifold.edge_at(mf.BoundaryRef(w.parent.block_id, w.own_class)) for w in walls]
    sides = [e.side_of(mf.BoundaryRef(w.parent.block_id, w.own_class)) for w, e in zip(walls, edges)]
    axes = []
    for st in states:
        cls = st.surface.boundary_class(st.attach_class)
        axes.append((cls.axis, cls.arc_origin))

    def total_length(x):
        # x = (s_1, h_1, ..., s_m, h_m) own-side coordinates per wall
        total = 0.0
        # entering coordinates on wall j in block-j conventions
        u_prev, r_prev = states[0].u, states[0].r
        for j in range(m):
            s_j, h_j = x[2 * j], x[2 * j + 1]
            a_axis, a_origin = axes[j]
            p = hyp.point_at_arclength(a_axis, a_origin, u_prev)
            q = hyp.point_at_arclength(walls[j].own_line, walls[j].own_origin, s_j)
            d = hyp.dist_h2(p, q)
            total += math.hypot(d, r_prev - h_j)
            u_prev, r_prev = mf.transition_apply(edges[j], sides[j], (s_j, h_j))
        return total

    x0 = []
    for w in walls:
        x0.extend([w.own_u, w.own_r])
    x0 = np.array(x0)
    best = total_length(x0)
    for k in range(max(1, samples)):
        start = x0 if k == 0 else x0 + 0.35 * np.sin(
            (k + 1) * np.arange(1, len(x0) + 1) * 2.399
        )
        res = optimize.minimize(total_length, start, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if res.fun < best:
            best = float(res.fun)
    return best
