"""Deterministic in-process simulation of rendezvous data exchange.

Two applications with arbitrary mesh partitions route field data through a
structured rendezvous partition of the shared domain: every rank computes
where to send its data from local information plus the O(cells) rendezvous
grid, without ever learning the other application's layout. Ranks are
simulated as indexed contexts with explicit mailboxes; delivery order is
fixed by (source rank, destination rank), so runs are reproducible.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .conservative import (
    assemble_from_subdivision,
    assemble_mass,
    clip_pairs,
    fan_subdivision,
    sliver_threshold,
    solve_projection,
)
from .errors import ExchangeError, FieldError, PartitionError
from .mesh import Field
from .metrics import ConservativeSpec
from .pointwise import FitSpec, FixedRadius, fit_point_cloud
from .quadrature import quadrature_for

__all__ = [
    "RdvPartition",
    "AppPartition",
    "RoutingPlan",
    "Message",
    "Mailboxes",
    "MessageStats",
    "build_rdv_partition",
    "rcb_partition",
    "classification_partition",
    "plan_forward",
    "plan_reverse",
    "exchange",
    "coupled_transfer",
]


@dataclass(frozen=True)
class RdvPartition:
    """Structured rendezvous decomposition: O(nx*ny) memory, O(1) owner
    queries. Cells are half-open (lo, hi] per axis (boundary points fall in
    the lower-index cell) and closed at the bbox minimum edge."""

    bbox: np.ndarray  # (2, 2) [[xmin, ymin], [xmax, ymax]]
    nx: int
    ny: int
    n_ranks: int
    cell_owner: np.ndarray  # (nx * ny,)

    def __post_init__(self):
        bbox = np.ascontiguousarray(self.bbox, dtype=np.float64).reshape(2, 2)
        owner = np.ascontiguousarray(self.cell_owner, dtype=np.int64)
        bbox.flags.writeable = False
        owner.flags.writeable = False
        object.__setattr__(self, "bbox", bbox)
        object.__setattr__(self, "cell_owner", owner)

    def _axis_cells(self, v, axis):
        lo = self.bbox[0, axis]
        hi = self.bbox[1, axis]
        n = self.nx if axis == 0 else self.ny
        d = (hi - lo) / n
        c = np.ceil((np.asarray(v, dtype=np.float64) - lo) / d).astype(np.int64) - 1
        return np.clip(c, 0, n - 1)

    def cell_index_of(self, points):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        ix = self._axis_cells(pts[:, 0], 0)
        iy = self._axis_cells(pts[:, 1], 1)
        return iy * self.nx + ix

    def owner_of_points(self, points):
        return self.cell_owner[self.cell_index_of(points)]

    def owner_of(self, point):
        return int(self.owner_of_points(np.asarray(tuple(point))[None, :])[0])

    def owners_in_box(self, lo_x, lo_y, hi_x, hi_y):
        """Distinct owners of all cells overlapping a box (ascending)."""
        ix0, ix1 = self._axis_cells([lo_x, hi_x], 0)
        iy0, iy1 = self._axis_cells([lo_y, hi_y], 1)
        cells = (np.arange(iy0, iy1 + 1)[:, None] * self.nx
                 + np.arange(ix0, ix1 + 1)[None, :]).reshape(-1)
        return np.unique(self.cell_owner[cells])

    def contains_box(self, bbox):
        return (self.bbox[0] <= bbox[0] + 1e-30).all() and (bbox[1] <= self.bbox[1] + 1e-30).all()


def build_rdv_partition(bbox, nx, ny, n_ranks):
    """Round-robin row-major cell ownership over a structured grid."""
    if nx < 1 or ny < 1:
        raise PartitionError("nx and ny must be >= 1")
    if n_ranks < 1:
        raise PartitionError("n_ranks must be >= 1")
    owner = np.arange(nx * ny, dtype=np.int64) % n_ranks
    return RdvPartition(np.asarray(bbox, dtype=np.float64).reshape(2, 2),
                        int(nx), int(ny), int(n_ranks), owner)


@dataclass(frozen=True)
class AppPartition:
    """Element ownership of one application's mesh."""

    mesh: object
    elem_owner: np.ndarray
    n_ranks: int
    kind: str

    def __post_init__(self):
        owner = np.ascontiguousarray(self.elem_owner, dtype=np.int64)
        if owner.shape != (self.mesh.nelems,):
            raise PartitionError("elem_owner must have one rank per element")
        if owner.min() < 0 or owner.max() >= self.n_ranks:
            raise PartitionError(f"element ranks must lie in [0, {self.n_ranks})")
        owner.flags.writeable = False
        object.__setattr__(self, "elem_owner", owner)

    def vertex_owner(self):
        """Vertex dofs belong to the rank of their lowest-id incident
        element (deterministic, partition-scheme independent)."""
        first_elem = np.full(self.mesh.nverts, self.mesh.nelems, dtype=np.int64)
        np.minimum.at(first_elem, self.mesh.tris.reshape(-1),
                      np.repeat(np.arange(self.mesh.nelems, dtype=np.int64), 3))
        return self.elem_owner[first_elem]

    def dof_owner(self, location):
        return self.vertex_owner() if location == "vertices" else self.elem_owner


def rcb_partition(mesh, n_ranks):
    """Recursive coordinate bisection of element centroids.

    Median splits alternate axes; ties broken by element id; part sizes at
    every split differ by at most one.
    """
    if n_ranks < 1 or (n_ranks & (n_ranks - 1)) != 0:
        raise PartitionError(f"rcb needs a power-of-two rank count, got {n_ranks}")
    cent = mesh.centroids()
    owner = np.zeros(mesh.nelems, dtype=np.int64)

    def split(ids, depth, lo, hi):
        if hi - lo == 1:
            owner[ids] = lo
            return
        axis = depth % 2
        order = np.lexsort((ids, cent[ids, axis]))
        s = ids[order]
        half = s.size // 2
        mid = (lo + hi) // 2
        split(s[:half], depth + 1, lo, mid)
        split(s[half:], depth + 1, mid, hi)

    split(np.arange(mesh.nelems, dtype=np.int64), 0, 0, n_ranks)
    return AppPartition(mesh, owner, n_ranks, "rcb")


def classification_partition(mesh, model_face_to_rank):
    """Assign each element the rank mapped from its model face id."""
    ids = mesh.tri_class[:, 1]
    try:
        owner = np.array([model_face_to_rank[int(i)] for i in ids], dtype=np.int64)
    except KeyError as exc:
        raise PartitionError(
            f"no rank mapped for model face id {exc.args[0]}") from None
    n_ranks = int(max(model_face_to_rank.values())) + 1
    return AppPartition(mesh, owner, n_ranks, "classification")


@dataclass(frozen=True)
class RoutingPlan:
    """Per-source-rank routing of owned entities to rendezvous owners.

    owned[r] lists rank r's entity ids ascending; groups[r] is a tuple of
    (destination rank, positions into owned[r]) with destinations ascending.
    Built rank-locally: the only shared input is the rendezvous partition.
    """

    n_src_ranks: int
    n_dst_ranks: int
    owned: tuple
    groups: tuple

    def message_count(self):
        return sum(len(g) for g in self.groups)

    def __eq__(self, other):
        if not isinstance(other, RoutingPlan):
            return NotImplemented
        if (self.n_src_ranks, self.n_dst_ranks) != (other.n_src_ranks, other.n_dst_ranks):
            return False
        for a, b in zip(self.owned, other.owned):
            if not np.array_equal(a, b):
                return False
        for ga, gb in zip(self.groups, other.groups):
            if len(ga) != len(gb):
                return False
            for (da, pa), (db, pb) in zip(ga, gb):
                if da != db or not np.array_equal(pa, pb):
                    return False
        return True


def _plan_from_items(ids, anchors, owners, n_src_ranks, rdv):
    inside = ((anchors >= rdv.bbox[0][None, :]).all(axis=1)
              & (anchors <= rdv.bbox[1][None, :]).all(axis=1))
    if not inside.all():
        bad = int(np.argmax(~inside))
        raise PartitionError(
            f"anchor point {anchors[bad].tolist()} of entity {ids[bad]} lies "
            "outside the rendezvous bbox")
    owned = []
    groups = []
    for r in range(n_src_ranks):
        mine = owners == r
        my_ids = ids[mine]
        order = np.argsort(my_ids, kind="stable")
        my_ids = my_ids[order]
        my_anchors = anchors[mine][order]
        dsts = rdv.owner_of_points(my_anchors)
        gs = []
        for d in np.unique(dsts):
            gs.append((int(d), np.nonzero(dsts == d)[0]))
        owned.append(my_ids)
        groups.append(tuple(gs))
    return RoutingPlan(n_src_ranks, rdv.n_ranks, tuple(owned), tuple(groups))


def plan_forward(app, rdv):
    """Route each owned element to the rendezvous owner of its centroid.

    Each rank's table is computed from its own elements plus the rendezvous
    partition only; no cross-rank information is consulted.
    """
    if not rdv.contains_box(app.mesh.bbox):
        raise PartitionError("mesh bbox is not contained in the rendezvous bbox")
    ids = app.mesh.tri_gid
    return _plan_from_items(ids, app.mesh.centroids(), app.elem_owner,
                            app.n_ranks, rdv)


def plan_reverse(plan):
    """Exact inverse routing; reverse(reverse(p)) == p."""
    received = [[] for _ in range(plan.n_dst_ranks)]
    for src in range(plan.n_src_ranks):
        for dst, pos in plan.groups[src]:
            received[dst].append((src, plan.owned[src][pos]))
    owned = []
    groups = []
    for r in range(plan.n_dst_ranks):
        if received[r]:
            all_ids = np.concatenate([ids for _, ids in received[r]])
        else:
            all_ids = np.empty(0, dtype=np.int64)
        all_ids = np.sort(all_ids)
        gs = []
        for src, ids in received[r]:
            pos = np.searchsorted(all_ids, np.sort(ids))
            gs.append((src, pos))
        gs.sort(key=lambda t: t[0])
        owned.append(all_ids)
        groups.append(tuple(gs))
    return RoutingPlan(plan.n_dst_ranks, plan.n_src_ranks, tuple(owned),
                       tuple(groups))


@dataclass(frozen=True)
class Message:
    src: int
    dst: int
    entity_ids: np.ndarray
    values: np.ndarray

    @property
    def nbytes(self):
        return 8 * (self.entity_ids.size + self.values.size)

    def __eq__(self, other):
        if not isinstance(other, Message):
            return NotImplemented
        return (self.src == other.src and self.dst == other.dst
                and np.array_equal(self.entity_ids, other.entity_ids)
                and np.array_equal(self.values, other.values))


@dataclass
class Mailboxes:
    """Per-rank inboxes; messages arrive sorted by (src, dst)."""

    n_ranks: int
    inboxes: list = dc_field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, Mailboxes):
            return NotImplemented
        return self.n_ranks == other.n_ranks and self.inboxes == other.inboxes


def _deliver(n_ranks, messages):
    """Sort raw messages by (src, dst) and fill inboxes."""
    boxes = Mailboxes(n_ranks, [[] for _ in range(n_ranks)])
    for msg in sorted(messages, key=lambda m: (m.src, m.dst)):
        boxes.inboxes[msg.dst].append(msg)
    return boxes


def exchange(plan, payloads):
    """Deliver one payload slice per plan entry; pure routing, no
    arithmetic, so payload multisets are conserved bitwise."""
    if len(payloads) != plan.n_src_ranks:
        raise ExchangeError(
            f"expected {plan.n_src_ranks} payload arrays, got {len(payloads)}")
    messages = []
    for src in range(plan.n_src_ranks):
        payload = np.asarray(payloads[src])
        if payload.shape[0] != plan.owned[src].shape[0]:
            raise ExchangeError(
                f"rank {src}: payload length {payload.shape[0]} does not "
                f"match {plan.owned[src].shape[0]} owned entities")
        for dst, pos in plan.groups[src]:
            messages.append(Message(src, dst, plan.owned[src][pos],
                                    payload[pos]))
    return _deliver(plan.n_dst_ranks, messages)


class MessageStats:
    """Per-(role, rank) message and byte counters for one transfer round."""

    ROLES = ("app_a", "app_b", "rdv")

    def __init__(self, rank_counts):
        self.rank_counts = dict(rank_counts)
        self.rows = {(role, r): [0, 0, 0, 0]
                     for role in self.ROLES
                     for r in range(self.rank_counts.get(role, 0))}

    def sent(self, role, rank, nbytes):
        row = self.rows[(role, rank)]
        row[0] += 1
        row[2] += nbytes

    def received(self, role, rank, nbytes):
        row = self.rows[(role, rank)]
        row[1] += 1
        row[3] += nbytes

    def count_messages(self, messages, src_role, dst_role):
        for m in messages:
            self.sent(src_role, m.src, m.nbytes)
            self.received(dst_role, m.dst, m.nbytes)

    def total(self, role, column):
        cols = {"msgs_sent": 0, "msgs_recv": 1, "bytes_sent": 2, "bytes_recv": 3}
        c = cols[column]
        return sum(v[c] for (role_, _), v in self.rows.items() if role_ == role)

    def table(self):
        """Rows (role, rank, msgs_sent, msgs_recv, bytes_sent, bytes_recv)."""
        out = []
        for role in self.ROLES:
            for r in range(self.rank_counts.get(role, 0)):
                ms, mr, bs, br = self.rows[(role, r)]
                out.append((role, r, ms, mr, bs, br))
        return out


def _group_messages(src_ids, src_ranks, dst_ranks, id_payloads):
    """One message per (src, dst) pair, entities ascending by id."""
    messages = []
    order = np.lexsort((src_ids, dst_ranks, src_ranks))
    ids = src_ids[order]
    srcs = src_ranks[order]
    dsts = dst_ranks[order]
    payload = id_payloads[order]
    if ids.size == 0:
        return messages
    breaks = np.nonzero((srcs[1:] != srcs[:-1]) | (dsts[1:] != dsts[:-1]))[0] + 1
    bounds = np.concatenate([[0], breaks, [ids.size]])
    for b0, b1 in zip(bounds[:-1], bounds[1:]):
        messages.append(Message(int(srcs[b0]), int(dsts[b0]),
                                ids[b0:b1], payload[b0:b1]))
    return messages


def _halo_destinations(rdv, lo_x, lo_y, hi_x, hi_y):
    return rdv.owners_in_box(lo_x, lo_y, hi_x, hi_y)


def _scatter_with_halo(ids, anchors, boxes, owners, rdv, payload, stats,
                       src_role):
    """Send each item to its anchor owner plus every rank owning a cell its
    halo box overlaps (one copy per destination)."""
    src_list = []
    dst_list = []
    row_list = []
    primary = rdv.owner_of_points(anchors)
    for i in range(ids.shape[0]):
        dsts = _halo_destinations(rdv, boxes[i, 0], boxes[i, 1],
                                  boxes[i, 2], boxes[i, 3])
        if primary[i] not in dsts:
            dsts = np.unique(np.concatenate([dsts, [primary[i]]]))
        for d in dsts:
            src_list.append(owners[i])
            dst_list.append(d)
            row_list.append(i)
    rows = np.asarray(row_list, dtype=np.int64)
    msgs = _group_messages(ids[rows],
                           np.asarray(src_list, dtype=np.int64),
                           np.asarray(dst_list, dtype=np.int64),
                           payload[rows])
    stats.count_messages(msgs, src_role, "rdv")
    return _deliver(rdv.n_ranks, msgs)


def _scatter_once(ids, anchors, owners, rdv, payload, stats, src_role):
    dsts = rdv.owner_of_points(anchors)
    msgs = _group_messages(ids, owners, dsts, payload)
    stats.count_messages(msgs, src_role, "rdv")
    return _deliver(rdv.n_ranks, msgs)


def _inbox_concat(box, rank, ncols):
    msgs = box.inboxes[rank]
    if not msgs:
        return (np.empty(0, dtype=np.int64),
                np.empty((0, ncols)), np.empty(0, dtype=np.int64))
    ids = np.concatenate([m.entity_ids for m in msgs])
    vals = np.concatenate([m.values.reshape(m.entity_ids.size, -1) for m in msgs])
    srcs = np.concatenate([np.full(m.entity_ids.size, m.src, dtype=np.int64)
                           for m in msgs])
    return ids, vals, srcs


def _dedupe_sorted(ids, vals):
    """Sort by id and drop duplicate ids (halo copies carry equal data)."""
    order = np.argsort(ids, kind="stable")
    ids = ids[order]
    vals = vals[order]
    keep = np.ones(ids.size, dtype=bool)
    keep[1:] = ids[1:] != ids[:-1]
    return ids[keep], vals[keep]


def _coupled_pointwise(source_field, part_a, target_mesh, part_b, rdv,
                       fitspec, stats):
    if not isinstance(fitspec.selection, FixedRadius):
        raise FieldError(
            "coupled pointwise transfer needs a fixed-radius selection; the "
            "halo width must be known from the method configuration")
    r_c = fitspec.selection.r_c
    src_pts = source_field.dof_points()
    src_owner = part_a.dof_owner(source_field.location)
    n_dofs_a = src_pts.shape[0]
    ids_a = np.arange(n_dofs_a, dtype=np.int64)
    # application A: dof data to anchor owner + halo owners within r_c
    payload_a = np.column_stack([src_pts, source_field.values])
    boxes = np.column_stack([src_pts[:, 0] - r_c, src_pts[:, 1] - r_c,
                             src_pts[:, 0] + r_c, src_pts[:, 1] + r_c])
    rdv_src = _scatter_with_halo(ids_a, src_pts, boxes, src_owner, rdv,
                                 payload_a, stats, "app_a")
    # application B: target dof requests to their anchor owners
    tgt_pts = target_mesh.coords
    tgt_owner = part_b.dof_owner("vertices")
    ids_b = np.arange(target_mesh.nverts, dtype=np.int64)
    rdv_req = _scatter_once(ids_b, tgt_pts, tgt_owner, rdv,
                            tgt_pts.copy(), stats, "app_b")
    # rendezvous ranks fit their targets from deduped local source clouds
    out_msgs = []
    for r in range(rdv.n_ranks):
        req_ids, req_xy, req_srcs = _inbox_concat(rdv_req, r, 2)
        if req_ids.size == 0:
            continue
        sids, sdata, _ = _inbox_concat(rdv_src, r, 3)
        sids, sdata = _dedupe_sorted(sids, sdata)
        values = fit_point_cloud(sdata[:, :2], sdata[:, 2], req_xy, fitspec)
        for b_rank in np.unique(req_srcs):
            sel = req_srcs == b_rank
            order = np.argsort(req_ids[sel], kind="stable")
            out_msgs.append(Message(r, int(b_rank), req_ids[sel][order],
                                    values[sel][order]))
    stats.count_messages(out_msgs, "rdv", "app_b")
    final = _deliver(part_b.n_ranks, out_msgs)
    out = np.zeros(target_mesh.nverts)
    for rank in range(part_b.n_ranks):
        for m in final.inboxes[rank]:
            out[m.entity_ids] = m.values
    return Field(target_mesh, "vertices", 1, out, name=source_field.name)


def _coupled_conservative(source_field, part_a, target_mesh, part_b, rdv,
                          spec, stats):
    src_mesh = source_field.mesh
    ne_s = src_mesh.nelems
    ids_s = np.arange(ne_s, dtype=np.int64)
    src_xy3 = src_mesh.tri_xy
    # coupler-shared scalars: sliver cutoff and halo pad (bbox diagonal of a
    # triangle is at most sqrt(2) times its longest edge)
    thresh = sliver_threshold(src_mesh.total_area, ne_s,
                              target_mesh.total_area, target_mesh.nelems)
    pad = 1.5 * float(target_mesh.diameters.max())
    if source_field.degree == 0:
        payload_s = np.column_stack([src_xy3.reshape(ne_s, 6),
                                     source_field.values])
    else:
        payload_s = np.column_stack([
            src_xy3.reshape(ne_s, 6),
            source_field.values[src_mesh.tris]])
    s_lo = src_xy3.min(axis=1)
    s_hi = src_xy3.max(axis=1)
    boxes = np.column_stack([s_lo[:, 0] - pad, s_lo[:, 1] - pad,
                             s_hi[:, 0] + pad, s_hi[:, 1] + pad])
    rdv_src = _scatter_with_halo(ids_s, src_mesh.centroids(), boxes,
                                 part_a.elem_owner, rdv, payload_s, stats,
                                 "app_a")
    # application B: target elements (coords + dof ids) to centroid owners
    ne_t = target_mesh.nelems
    ids_t = np.arange(ne_t, dtype=np.int64)
    payload_t = np.column_stack([
        target_mesh.tri_xy.reshape(ne_t, 6),
        target_mesh.tris.astype(np.float64)])
    rdv_tgt = _scatter_once(ids_t, target_mesh.centroids(),
                            part_b.elem_owner, rdv, payload_t, stats, "app_b")
    # rendezvous ranks clip and assemble partial right-hand sides
    rule = quadrature_for(source_field.degree + 1
                          if spec.quadrature_degree is None
                          else spec.quadrature_degree)
    ndofs = target_mesh.nverts
    partial_msgs = []
    for r in range(rdv.n_ranks):
        tids, tdata, _ = _inbox_concat(rdv_tgt, r, 9)
        if tids.size == 0:
            continue
        order = np.argsort(tids, kind="stable")
        tids, tdata = tids[order], tdata[order]
        sids, sdata, _ = _inbox_concat(rdv_src, r, payload_s.shape[1])
        sids, sdata = _dedupe_sorted(sids, sdata)
        t_xy3 = tdata[:, :6].reshape(-1, 3, 2)
        t_dofs = tdata[:, 6:9].astype(np.int64)
        s_xy3_loc = sdata[:, :6].reshape(-1, 3, 2)
        s_vals = sdata[:, 6] if source_field.degree == 0 else sdata[:, 6:9]
        # bbox-overlap candidates per local target, ascending source gid
        sl = s_xy3_loc.min(axis=1)
        sh = s_xy3_loc.max(axis=1)
        ps_parts, pt_parts = [], []
        for j in range(tids.size):
            lo = t_xy3[j].min(axis=0)
            hi = t_xy3[j].max(axis=0)
            ok = ((sl[:, 0] <= hi[0]) & (sh[:, 0] >= lo[0])
                  & (sl[:, 1] <= hi[1]) & (sh[:, 1] >= lo[1]))
            cand = np.nonzero(ok)[0]
            ps_parts.append(cand)
            pt_parts.append(np.full(cand.size, j, dtype=np.int64))
        if not ps_parts:
            continue
        ps = np.concatenate(ps_parts)
        pt = np.concatenate(pt_parts)
        kps, kpt, offs, verts, _areas = clip_pairs(
            s_xy3_loc, t_xy3, ps, pt, sids[ps], tids[pt], thresh)
        sub_corners, sub_cell = fan_subdivision(offs, verts)
        sub_s = kps[sub_cell]
        sub_t = kpt[sub_cell]
        b_part, cov_part = assemble_from_subdivision(
            sub_corners, s_xy3_loc[sub_s],
            s_vals[sub_s], t_xy3[sub_t], t_dofs[sub_t], rule, ndofs)
        touched = np.nonzero((cov_part != 0.0) | (b_part != 0.0))[0]
        partial_msgs.append(Message(r, 0, touched,
                                    np.column_stack([b_part[touched],
                                                     cov_part[touched]])))
    # partial contributions funnel to rendezvous rank 0, which runs the solve
    stats.count_messages(partial_msgs, "rdv", "rdv")
    gathered = _deliver(rdv.n_ranks, partial_msgs)
    b = np.zeros(ndofs)
    coverage = np.zeros(ndofs)
    for m in gathered.inboxes[0]:
        np.add.at(b, m.entity_ids, m.values[:, 0])
        np.add.at(coverage, m.entity_ids, m.values[:, 1])
    mass = assemble_mass(target_mesh)
    x, _report = solve_projection(mass, b, coverage, target_mesh, spec.rel_tol)
    # solved dof values return to application B's dof owners
    tgt_owner = part_b.dof_owner("vertices")
    ids_b = np.arange(ndofs, dtype=np.int64)
    result_msgs = _group_messages(ids_b, np.zeros(ndofs, dtype=np.int64),
                                  tgt_owner, x[:, None])
    stats.count_messages(result_msgs, "rdv", "app_b")
    final = _deliver(part_b.n_ranks, result_msgs)
    out = np.zeros(ndofs)
    for rank in range(part_b.n_ranks):
        for m in final.inboxes[rank]:
            out[m.entity_ids] = m.values[:, 0]
    return Field(target_mesh, "vertices", 1, out, name=source_field.name)


def coupled_transfer(source_field, source_partition, target_mesh,
                     target_partition, rdv, method):
    """Transfer a field between two partitioned applications through the
    rendezvous partition.

    Returns (field on target_mesh vertices, MessageStats). Values agree
    with the serial single-rank transfer of the same method to within
    rounding (bitwise when every rank count is 1).
    """
    if source_partition.mesh is not source_field.mesh:
        raise FieldError("source partition does not match the source field")
    if target_partition.mesh is not target_mesh:
        raise FieldError("target partition does not match the target mesh")
    for mesh in (source_field.mesh, target_mesh):
        if not rdv.contains_box(mesh.bbox):
            raise PartitionError("mesh bbox is not contained in the rendezvous bbox")
    stats = MessageStats({"app_a": source_partition.n_ranks,
                          "app_b": target_partition.n_ranks,
                          "rdv": rdv.n_ranks})
    if isinstance(method, FitSpec):
        out = _coupled_pointwise(source_field, source_partition, target_mesh,
                                 target_partition, rdv, method, stats)
    elif isinstance(method, ConservativeSpec):
        out = _coupled_conservative(source_field, source_partition,
                                    target_mesh, target_partition, rdv,
                                    method, stats)
    else:
        raise TypeError(f"unknown method configuration {method!r}")
    return out, stats
