"""
Largest inscribed spheres of regions of intense vorticity.

Each RIV is meshed as the isosurface of its source field at the RIV cut,
distances to the mesh come from a bounding-box hierarchy, inside/outside is
decided by ray-crossing parity (RIV meshes need not be orientable), and the
best interior distance is refined on successively finer local grids.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
import logging
import math
import threading

import numpy as np
from django.conf import settings
from scipy import ndimage
from scipy.spatial import cKDTree
from skimage import measure

from .exceptions import GeometryError

logger = logging.getLogger(__name__)

BARYCENTRIC_TOLERANCE = 1e-9
MAX_RAY_RETRIES = 3


@dataclass(frozen=True)
class GeometryConfig:
    connectivity: int = 26
    refine_depth: int = 3
    neighborhood_cells: int = 2
    ray_count: int = 5
    ray_seed: int = 20190604
    leaf_size: int = 8

    def __post_init__(self):
        if self.connectivity not in (6, 26):
            raise GeometryError('connectivity must be 6 or 26.')
        if self.refine_depth < 0:
            raise GeometryError('refine_depth must be non-negative.')
        if self.ray_count < 1:
            raise GeometryError('ray_count must be at least 1.')
        if self.leaf_size < 1:
            raise GeometryError('leaf_size must be at least 1.')

    @classmethod
    def from_settings(cls, **overrides):
        values = {
            'connectivity': getattr(settings, 'SPARSENESS_CONNECTIVITY', cls.connectivity),
            'refine_depth': getattr(settings, 'SPARSENESS_REFINE_DEPTH', cls.refine_depth),
            'ray_count': getattr(settings, 'SPARSENESS_RAY_COUNT', cls.ray_count),
            'ray_seed': getattr(settings, 'SPARSENESS_RAY_SEED', cls.ray_seed),
            'leaf_size': getattr(settings, 'SPARSENESS_BVH_LEAF_SIZE', cls.leaf_size),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


# ==================== MESHES ====================

@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    orientable: bool = False

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), False)

    @classmethod
    def from_arrays(cls, vertices, triangles):
        """Merge coincident vertices, drop degenerate triangles, detect orientability."""
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.size == 0:
            return cls.empty()
        vertices, inverse = np.unique(vertices, axis=0, return_inverse=True)
        triangles = inverse.reshape(-1)[triangles]

        distinct = (
            (triangles[:, 0] != triangles[:, 1])
            & (triangles[:, 1] != triangles[:, 2])
            & (triangles[:, 0] != triangles[:, 2])
        )
        a, b, c = (vertices[triangles[:, i]] for i in range(3))
        area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        triangles = triangles[distinct & (area > 0)]
        if triangles.size == 0:
            return cls.empty()
        return cls(vertices, triangles, _is_orientable(triangles))

    @property
    def is_empty(self):
        return len(self.triangles) == 0

    def corners(self):
        return tuple(self.vertices[self.triangles[:, i]] for i in range(3))

    def surface_area(self):
        if self.is_empty:
            return 0.0
        a, b, c = self.corners()
        return float(0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1).sum())

    def translated(self, offset):
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=float), self.triangles, self.orientable)


def _is_orientable(triangles):
    """Closed two-manifold with consistently wound faces: each edge used twice, once per direction."""
    directed = triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    _, directed_counts = np.unique(directed, axis=0, return_counts=True)
    _, undirected_counts = np.unique(np.sort(directed, axis=1), axis=0, return_counts=True)
    return bool(np.all(directed_counts == 1) and np.all(undirected_counts == 2))


def _march(volume, level, spacing, origin=(0.0, 0.0, 0.0)):
    try:
        vertices, triangles, _, _ = measure.marching_cubes(
            volume, level=level, spacing=(spacing,) * 3,
            method='lorensen', allow_degenerate=False,
        )
    except ValueError:
        # No crossing of the level anywhere in the volume.
        return TriangleMesh.empty()
    return TriangleMesh.from_arrays(vertices + np.asarray(origin, dtype=float), triangles)


def extract_isosurface(s, level):
    """
    Marching-cubes surface of {s = level} over the whole periodic box.

    The field is wrap-extended by one sample on the high side of every axis so
    cells spanning the box faces are meshed too; vertices lie in [0, L]³.
    """
    values = np.pad(s.values, ((0, 1),) * 3, mode='wrap')
    return _march(values, level, s.grid.spacing)


def write_obj(mesh, path):
    lines = [f'# vertices={len(mesh.vertices)} triangles={len(mesh.triangles)} orientable={mesh.orientable}']
    lines.extend(f'v {x!r} {y!r} {z!r}' for x, y, z in mesh.vertices.tolist())
    lines.extend(f'f {a + 1} {b + 1} {c + 1}' for a, b, c in mesh.triangles.tolist())
    with open(path, 'w') as handle:
        handle.write('\n'.join(lines) + '\n')


# ==================== BOUNDING-BOX HIERARCHY ====================

@dataclass(frozen=True, eq=False)
class AabbTree:
    """
    Flat median-split hierarchy of axis-aligned boxes over a mesh's triangles.

    Node 0 is the root; ``left``/``right`` are -1 at leaves, which own the
    triangle slice ``start:start + count`` of the reordered corner arrays.
    """
    lower: np.ndarray
    upper: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    vertex_index: cKDTree
    scale: float
    leaf_size: int

    @property
    def triangle_count(self):
        return len(self.a)

    def is_leaf(self, node):
        return self.left[node] < 0


def build_tree(mesh, leaf_size=8):
    if mesh.is_empty:
        raise GeometryError('Cannot build a bounding-box hierarchy over an empty mesh.')
    a, b, c = mesh.corners()
    tri_lower = np.minimum(np.minimum(a, b), c)
    tri_upper = np.maximum(np.maximum(a, b), c)
    centroids = (a + b + c) / 3.0
    scale = float(np.ptp(mesh.vertices, axis=0).max()) or 1.0
    pad = 1e-9 * scale

    order = np.arange(len(a))
    lower, upper, left, right, start, count = [], [], [], [], [], []
    stack = [(0, len(a), -1, False)]
    while stack:
        begin, end, parent, is_right = stack.pop()
        node = len(lower)
        members = order[begin:end]
        lower.append(tri_lower[members].min(axis=0) - pad)
        upper.append(tri_upper[members].max(axis=0) + pad)
        left.append(-1)
        right.append(-1)
        start.append(begin)
        count.append(end - begin)
        if parent >= 0:
            (right if is_right else left)[parent] = node

        spread = np.ptp(centroids[members], axis=0)
        if end - begin <= leaf_size or spread.max() == 0:
            continue
        axis = int(np.argmax(spread))
        middle = (end - begin) // 2
        split = np.argpartition(centroids[members, axis], middle)
        order[begin:end] = members[split]
        stack.append((begin + middle, end, node, True))
        stack.append((begin, begin + middle, node, False))

    used = np.unique(mesh.triangles)
    return AabbTree(
        lower=np.array(lower), upper=np.array(upper),
        left=np.array(left), right=np.array(right),
        start=np.array(start), count=np.array(count),
        a=a[order], b=b[order], c=c[order],
        vertex_index=cKDTree(mesh.vertices[used]),
        scale=scale,
        leaf_size=leaf_size,
    )


# ==================== DISTANCES ====================

def _dot(u, v):
    return np.einsum('...i,...i->...', u, v)


def _triangle_distance_sq(points, a, b, c):
    """
    Squared distance from each point to each triangle, shape (P, T), by
    Voronoi-region classification of the closest point.
    """
    p = points[:, None, :]
    a, b, c = a[None], b[None], c[None]
    ab, ac, bc = b - a, c - a, c - b
    ap, bp, cp = p - a, p - b, p - c
    d1, d2 = _dot(ab, ap), _dot(ac, ap)
    d3, d4 = _dot(ab, bp), _dot(ac, bp)
    d5, d6 = _dot(ab, cp), _dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide='ignore', invalid='ignore'):
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = 1.0 / (va + vb + vc)
        v, w = vb * denom, vc * denom

    conditions = [
        (d1 <= 0) & (d2 <= 0),
        (d3 >= 0) & (d4 <= d3),
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),
        (d6 >= 0) & (d5 <= d6),
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),
        (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
    ]
    choices = [
        a, b,
        a + t_ab[..., None] * ab,
        c,
        a + t_ac[..., None] * ac,
        b + t_bc[..., None] * bc,
    ]
    shape = np.broadcast_shapes(p.shape, a.shape)
    closest = np.select(
        [np.broadcast_to(cond[..., None], shape) for cond in conditions],
        [np.broadcast_to(choice, shape) for choice in choices],
        default=np.broadcast_to(a + v[..., None] * ab + w[..., None] * ac, shape),
    )
    return _dot(p - closest, p - closest)


def _box_distance_sq(points, lower, upper):
    gap = np.maximum(lower - points, 0.0) + np.maximum(points - upper, 0.0)
    return _dot(gap, gap)


def unsigned_distances(tree, points):
    """
    Exact distances from points to the mesh surface by batched branch and
    bound: a node is opened only for points whose box lower bound beats their
    current best, seeded with the nearest-vertex distance.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if tree is None or tree.triangle_count == 0:
        raise GeometryError('Distance query on an empty mesh.')
    best_sq = tree.vertex_index.query(points)[0] ** 2

    stack = [(0, np.arange(len(points)))]
    while stack:
        node, active = stack.pop()
        bound = _box_distance_sq(points[active], tree.lower[node], tree.upper[node])
        active = active[bound < best_sq[active]]
        if active.size == 0:
            continue
        if tree.is_leaf(node):
            span = slice(tree.start[node], tree.start[node] + tree.count[node])
            found = _triangle_distance_sq(points[active], tree.a[span], tree.b[span], tree.c[span]).min(axis=1)
            best_sq[active] = np.minimum(best_sq[active], found)
        else:
            stack.append((tree.right[node], active))
            stack.append((tree.left[node], active))
    return np.sqrt(best_sq)


def unsigned_distance(tree, point):
    return float(unsigned_distances(tree, np.asarray(point, dtype=float)[None])[0])


def brute_force_distances(mesh, points, chunk=256):
    """All-triangles scan; the reference the hierarchy must reproduce."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a, b, c = mesh.corners()
    result = np.empty(len(points))
    for begin in range(0, len(points), chunk):
        block = points[begin:begin + chunk]
        result[begin:begin + chunk] = np.sqrt(_triangle_distance_sq(block, a, b, c).min(axis=1))
    return result


# ==================== INSIDE / OUTSIDE ====================

def ray_directions(count, seed):
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(count, 3))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def _ray_crossings(tree, origins, direction):
    """Per-origin crossing counts along one direction, plus an ambiguity flag for grazing hits."""
    crossings = np.zeros(len(origins), dtype=np.int64)
    ambiguous = np.zeros(len(origins), dtype=bool)
    length_tolerance = 1e-10 * tree.scale
    with np.errstate(divide='ignore', invalid='ignore'):
        inverse = 1.0 / direction

    stack = [(0, np.arange(len(origins)))]
    while stack:
        node, active = stack.pop()
        o = origins[active]
        with np.errstate(invalid='ignore'):
            t1 = (tree.lower[node] - o) * inverse
            t2 = (tree.upper[node] - o) * inverse
        near = np.nanmax(np.minimum(t1, t2), axis=1)
        far = np.nanmin(np.maximum(t1, t2), axis=1)
        active = active[far >= np.maximum(near, 0.0)]
        if active.size == 0:
            continue
        if not tree.is_leaf(node):
            stack.append((tree.right[node], active))
            stack.append((tree.left[node], active))
            continue

        span = slice(tree.start[node], tree.start[node] + tree.count[node])
        a, b, c = tree.a[span], tree.b[span], tree.c[span]
        e1, e2 = b - a, c - a
        pvec = np.cross(direction, e2)
        det = _dot(e1, pvec)
        usable = np.abs(det) > 1e-14 * tree.scale ** 2
        with np.errstate(divide='ignore', invalid='ignore'):
            inv_det = np.where(usable, 1.0 / det, 0.0)
        tvec = origins[active][:, None, :] - a[None]
        u = _dot(tvec, pvec[None]) * inv_det
        qvec = np.cross(tvec, e1[None])
        v = (qvec @ direction) * inv_det
        t = _dot(qvec, e2[None]) * inv_det

        tol = BARYCENTRIC_TOLERANCE
        candidate = usable & (u >= -tol) & (v >= -tol) & (u + v <= 1 + tol) & (t > -length_tolerance)
        grazing = (np.abs(u) <= tol) | (np.abs(v) <= tol) | (np.abs(u + v - 1) <= tol) | (np.abs(t) <= length_tolerance)
        crossings[active] += np.count_nonzero(candidate & ~grazing, axis=1)
        ambiguous[active] |= np.any(candidate & grazing, axis=1)
    return crossings, ambiguous


def inside_tests(tree, points, ray_count=5, seed=20190604):
    """
    Majority vote of crossing parity over ``ray_count`` seeded directions.

    Rays with grazing hits are recast along perturbed directions; returns
    (inside, flagged) where ``flagged`` marks points left without a clear
    majority.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rng = np.random.default_rng(seed + 1)
    inside_votes = np.zeros(len(points), dtype=np.int64)
    outside_votes = np.zeros(len(points), dtype=np.int64)
    for direction in ray_directions(ray_count, seed):
        pending = np.arange(len(points))
        current = direction
        for _ in range(MAX_RAY_RETRIES + 1):
            crossings, ambiguous = _ray_crossings(tree, points[pending], current)
            settled = pending[~ambiguous]
            odd = (crossings[~ambiguous] % 2) == 1
            inside_votes[settled[odd]] += 1
            outside_votes[settled[~odd]] += 1
            pending = pending[ambiguous]
            if pending.size == 0:
                break
            current = direction + 0.05 * rng.normal(size=3)
            current /= np.linalg.norm(current)

    inside = inside_votes > outside_votes
    flagged = inside_votes == outside_votes
    if flagged.any():
        logger.warning('Inside test undecided for %d point(s) after %d retries', int(flagged.sum()), MAX_RAY_RETRIES)
    return inside, flagged


def inside_test(tree, point, ray_count=5, seed=20190604):
    inside, _ = inside_tests(tree, np.asarray(point, dtype=float)[None], ray_count, seed)
    return bool(inside[0])


# ==================== INSCRIBED SPHERES ====================

@dataclass(frozen=True)
class InscribedSphereResult:
    riv_id: int
    center: tuple
    radius: float
    refinement_depth: int
    sub_voxel: bool = False
    inside_confirmed: bool = True
    source_component: str = None
    radius_by_level: tuple = ()

    def as_record(self, pruned=False):
        return {
            'riv_id': self.riv_id,
            'center': list(self.center),
            'radius': self.radius,
            'refinement_depth': self.refinement_depth,
            'pruned': pruned,
        }


@dataclass(frozen=True, eq=False)
class RivBlock:
    """
    The RIV's source field on its bbox grown by one cell, in unwrapped local
    coordinates. Non-member samples and the outer layer sit below the cut so
    the isosurface encloses exactly this RIV.
    """
    values: np.ndarray
    origin: np.ndarray
    spacing: float
    level: float

    def interpolate(self, points):
        coordinates = ((np.asarray(points) - self.origin) / self.spacing).T
        return ndimage.map_coordinates(self.values, coordinates, order=1, mode='nearest')

    def mesh(self):
        return _march(self.values, self.level, self.spacing, self.origin)


def riv_block(riv, s, level):
    grid = riv.grid
    n, h = grid.n, grid.spacing
    anchor = np.asarray(riv.bbox.anchor)
    extent = np.asarray(riv.bbox.extent)
    axes = [(np.arange(-1, e + 1) + a) % n for a, e in zip(anchor, extent)]
    values = s.values[np.ix_(*axes)].copy()

    below = level - 1e-9 * max(abs(level), 1.0)
    members = np.zeros(values.shape, dtype=bool)
    members[tuple(c + 1 for c in riv.local_coordinates())] = True
    values[~members] = np.minimum(values[~members], below)
    for axis in range(3):
        cap = [slice(None)] * 3
        for index in (0, -1):
            cap[axis] = index
            values[tuple(cap)] = np.minimum(values[tuple(cap)], below)
    return RivBlock(values=values, origin=(anchor - 1) * h, spacing=h, level=level)


def _refinement_offsets(step, neighborhood_cells):
    ticks = np.arange(-2 * neighborhood_cells, 2 * neighborhood_cells + 1) * step
    ox, oy, oz = np.meshgrid(ticks, ticks, ticks, indexing='ij')
    return np.column_stack([ox.ravel(), oy.ravel(), oz.ravel()])


def max_inscribed_radius(riv, s, level=None, config=None):
    """
    Largest sphere inside one RIV's isosurface.

    Distances to the mesh are evaluated at the RIV's voxel centers, then on
    ``refine_depth`` successively halved local grids around the current best
    center. The radius only ever increases across levels.
    """
    config = config or GeometryConfig()
    if riv.voxel_count == 0:
        raise GeometryError(f'RIV {riv.component_id} has no voxels.')
    level = riv.threshold if level is None else level
    h = riv.grid.spacing

    block = riv_block(riv, s, level)
    mesh = block.mesh()
    if mesh.is_empty:
        raise GeometryError(f'RIV {riv.component_id} produced an empty isosurface at level {level:.6g}.')
    tree = build_tree(mesh, config.leaf_size)

    anchor = np.asarray(riv.bbox.anchor)
    centers = (np.column_stack(riv.local_coordinates()) + anchor) * h
    coarse = unsigned_distances(tree, centers)
    best = int(np.argmax(coarse))
    center, radius = centers[best], float(coarse[best])
    coarse_center = center
    history = [radius]
    refined = False

    for depth in range(1, config.refine_depth + 1):
        candidates = center + _refinement_offsets(h / 2 ** depth, config.neighborhood_cells)
        candidates = candidates[block.interpolate(candidates) > level]
        if len(candidates):
            distances = unsigned_distances(tree, candidates)
            pick = int(np.argmax(distances))
            if distances[pick] > radius:
                center, radius = candidates[pick], float(distances[pick])
                refined = True
        history.append(radius)

    confirmed = inside_test(tree, center, config.ray_count, config.ray_seed)
    if not confirmed and refined:
        logger.warning('Refined center of RIV %s failed the ray test; keeping the voxel-center estimate', riv.component_id)
        center, radius = coarse_center, history[0]
        history = [radius] * len(history)
        confirmed = inside_test(tree, center, config.ray_count, config.ray_seed)

    sub_voxel = history[0] < h
    if sub_voxel:
        logger.info('RIV %s is thinner than one voxel (coarse radius %.3g < spacing %.3g)',
                    riv.component_id, history[0], h)
    wrapped = tuple(float(x) for x in np.mod(center, riv.grid.domain_length))
    return InscribedSphereResult(
        riv_id=riv.component_id,
        center=wrapped,
        radius=radius,
        refinement_depth=config.refine_depth,
        sub_voxel=sub_voxel,
        inside_confirmed=confirmed,
        source_component=str(riv.source_component) if riv.source_component is not None else None,
        radius_by_level=tuple(history),
    )


def voxel_distance_oracle(mask):
    """
    Periodic Euclidean distance from each set voxel center to the nearest
    unset voxel center; zero on unset voxels.
    """
    grid = mask.grid
    if mask.bits.all():
        raise GeometryError('no exterior voxels')
    n, h = grid.n, grid.spacing
    pad = min(4, n)
    while True:
        padded = np.pad(mask.bits, pad, mode='wrap')
        distances = ndimage.distance_transform_edt(padded, sampling=h)[pad:-pad, pad:-pad, pad:-pad]
        # Exact once the nearest exterior of every voxel lies inside the padding.
        if distances.max() <= pad * h or pad > n // 2:
            return distances
        pad *= 2


# ==================== SEARCH OVER RIVS ====================

def bbox_radius_bound(riv):
    return riv.bbox.inradius_bound(riv.grid.spacing)


def _bbox_too_small(riv, bound, best_radius):
    return best_radius is not None and bound < best_radius


@dataclass
class RivSearch:
    best: InscribedSphereResult = None
    best_position: int = None
    results: dict = dataclass_field(default_factory=dict)
    pruned: list = dataclass_field(default_factory=list)

    @property
    def evaluated(self):
        return len(self.results)

    @property
    def best_radius(self):
        return self.best.radius if self.best is not None else None

    def offer(self, result, position):
        """Keep ``result`` if it beats the current best; equal radii keep the earlier position."""
        if self.best is None or (result.radius, -position) > (self.best.radius, -self.best_position):
            self.best, self.best_position = result, position

    def records(self):
        rows = [result.as_record() for result in self.results.values()]
        rows.extend({'riv_id': riv_id, 'center': None, 'radius': None, 'refinement_depth': 0, 'pruned': True}
                    for riv_id in self.pruned)
        return sorted(rows, key=lambda row: row['riv_id'])


def search_rivs(rivs, fields_by_source, level=None, config=None, prune=True, workers=1, skip_rule=None):
    """
    Greatest inscribed radius over ``rivs``, largest bbox bound first.

    With pruning, a RIV whose grown bbox cannot hold a sphere of the current
    best radius is skipped; the result equals exhaustive evaluation. Equal
    radii resolve to the RIV listed first. Worker threads share the best
    radius under a lock; a stale bound only costs an extra evaluation.
    """
    config = config or GeometryConfig()
    skip_rule = skip_rule or _bbox_too_small
    ordered = sorted(enumerate(rivs), key=lambda item: (-bbox_radius_bound(item[1]), item[0]))
    search = RivSearch()
    lock = threading.Lock()

    def visit(item):
        position, riv = item
        bound = bbox_radius_bound(riv)
        with lock:
            if prune and skip_rule(riv, bound, search.best_radius):
                search.pruned.append(riv.component_id)
                logger.debug('Pruned RIV %s (bound %.4g, best %s)', riv.component_id, bound, search.best_radius)
                return
        result = max_inscribed_radius(riv, fields_by_source[riv.source_component], level, config)
        with lock:
            search.results[riv.component_id] = result
            search.offer(result, position)

    if workers > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(visit, ordered))
    else:
        for item in ordered:
            visit(item)

    logger.info('Inscribed-sphere search: %d evaluated, %d pruned', search.evaluated, len(search.pruned))
    return search


def max_radius_over_rivs(rivs, fields_by_source, level=None, config=None, prune=True, workers=1, skip_rule=None):
    return search_rivs(rivs, fields_by_source, level, config, prune, workers, skip_rule).best


def inscribed_sphere_records(search):
    return search.records()


def sphere_surface_points(center, radius, count=100, seed=0):
    """Quasi-uniform points on a sphere (Fibonacci lattice); ``seed`` rotates the lattice."""
    index = np.arange(count) + 0.5
    polar = np.arccos(1 - 2 * index / count)
    azimuth = math.pi * (1 + 5 ** 0.5) * index + seed
    offsets = np.column_stack([
        np.cos(azimuth) * np.sin(polar),
        np.sin(azimuth) * np.sin(polar),
        np.cos(polar),
    ])
    return np.asarray(center) + radius * offsets
