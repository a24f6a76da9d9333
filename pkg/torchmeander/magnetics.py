import os
import json
import math
import logging
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import torch
from scipy.special import roots_legendre

from torchmeander.errors import DiscretizationError
from torchmeander.errors import ParameterDomainError
from torchmeander.errors import ProximityError
from torchmeander.geometry import DTYPE
from torchmeander.geometry import path_length

logger = logging.getLogger(__name__)

MU0 = 4e-7 * math.pi
MATERIALS_NOTE = ('conductor constants are engineering defaults, '
                  'not measured values of the fabricated coils')
MATERIALS_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                              'materials.json')

# points per field chunk; fixed so the summation does not depend on workers
CHUNK_SIZE = 256
# segment rows per block of the Neumann double sum
ROW_BLOCK = 32
QUADRATURE_ORDER = 4
REFINE_TOLERANCE = 1e-4
MAX_REFINE_LEVEL = 6

@dataclass(frozen=True)
class Conductor:
    name: str
    resistivity: float = None
    relative_permeability: float = 1.
    resistance_per_length_override: float = None

    def __post_init__(self):
        has_rho = self.resistivity is not None
        has_override = self.resistance_per_length_override is not None
        if has_rho == has_override:
            raise ParameterDomainError(
                f'conductor {self.name}: exactly one of resistivity and '
                'resistance_per_length must be given'
            )
        value = self.resistivity if has_rho\
            else self.resistance_per_length_override
        if not (math.isfinite(value) and value > 0):
            raise ParameterDomainError(
                f'conductor {self.name}: resistance parameter must be positive')
        if not (math.isfinite(self.relative_permeability)
                and self.relative_permeability >= 1):
            raise ParameterDomainError(
                f'conductor {self.name}: relative_permeability must be >= 1')

    @classmethod
    def from_dict(cls, name, d):
        override = d.get('resistance_per_length',
                         d.get('resistance_per_length_override'))
        return cls(
            name=name,
            resistivity=d.get('resistivity'),
            relative_permeability=d.get('relative_permeability', 1.),
            resistance_per_length_override=override,
        )

    def as_dict(self):
        d = {'relative_permeability': self.relative_permeability}
        if self.resistivity is not None:
            d['resistivity'] = self.resistivity
        else:
            d['resistance_per_length'] = self.resistance_per_length_override
        return d

def load_materials(path=None):
    with open(path or MATERIALS_PATH, 'r') as fp:
        presets = json.load(fp)
    return dict((name, Conductor.from_dict(name, d))
                for name, d in presets.items())

@dataclass(frozen=True, eq=False)
class FieldSample:
    position: torch.Tensor
    B: torch.Tensor

'''
Biot-Savart
'''

def _chunk_field(start, end, points, wire_radius, offset):
    # points: (n_points, 3), start/end: (n_segments, 3)
    r1 = start.unsqueeze(0) - points.unsqueeze(1)
    r2 = end.unsqueeze(0) - points.unsqueeze(1)
    d = end - start
    t = torch.clamp(-torch.sum(r1 * d, dim=-1) / torch.sum(d * d, dim=-1),
                    0., 1.)
    distance = torch.linalg.norm(r1 + t.unsqueeze(-1) * d, dim=-1)
    inside = torch.nonzero(distance <= wire_radius)
    if len(inside):
        point, segment = inside[0].tolist()
        raise ProximityError(
            f'point {offset + point} lies within the wire radius '
            f'of segment {segment}',
            segment_index=segment, point_index=offset + point
        )
    n1 = torch.linalg.norm(r1, dim=-1)
    n2 = torch.linalg.norm(r2, dim=-1)
    factor = (n1 + n2) / (n1 * n2 * (n1 * n2 + torch.sum(r1 * r2, dim=-1)))
    cross = torch.linalg.cross(r1, r2, dim=-1)
    return torch.sum(cross * factor.unsqueeze(-1), dim=1)

def b_field(path, current, points, workers=1):
    '''
    Flux density (tesla) of `current` amperes along `path` at `points`.

    points: (n_points, 3) -> (n_points, 3)
    Points are evaluated in fixed-size chunks; each chunk sums over segments
    in index order, so the result is identical for any number of workers.
    '''
    points = torch.as_tensor(points, dtype=DTYPE).reshape(-1, 3)
    start, end = path.segments()
    offsets = range(0, points.shape[0], CHUNK_SIZE)
    if workers is None or workers <= 1 or len(offsets) <= 1:
        parts = [
            _chunk_field(start, end, points[o:o+CHUNK_SIZE], path.wire_radius, o)
            for o in offsets
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_chunk_field, start, end,
                                points[o:o+CHUNK_SIZE], path.wire_radius, o)
                for o in offsets
            ]
            parts = [f.result() for f in futures]
    if not parts:
        return torch.zeros((0, 3), dtype=DTYPE)
    field = torch.cat(parts)
    if current == 0:
        return torch.zeros_like(field)
    return field * (MU0 / (4 * math.pi) * current)

def b_field_at(path, current, point):
    return b_field(path, current, torch.as_tensor(point, dtype=DTYPE)
                   .reshape(1, 3))[0]

'''
Neumann integrals
'''

def _gauss_legendre(order):
    # nodes and weights on [0, 1]
    x, w = roots_legendre(order)
    return torch.tensor((x + 1) / 2, dtype=DTYPE),\
        torch.tensor(w / 2, dtype=DTYPE)

def _distance_matrix(x, y):
    return torch.cdist(x, y, compute_mode='donot_use_mm_for_euclid_dist')

def _pair_integrals(start_a, dir_a, start_b, dir_b, regularization,
                    subdivisions):
    '''
    Double integral of 1/sqrt(r^2 + reg^2) over unit parameter ranges of
    paired segments, each split into `subdivisions` pieces.

    start_*, dir_*: (n_pairs, 3) -> (n_pairs,)
    '''
    nodes, weights = _gauss_legendre(QUADRATURE_ORDER)
    pieces = torch.arange(subdivisions, dtype=DTYPE)
    t = ((pieces.unsqueeze(-1) + nodes) / subdivisions).reshape(-1)
    w = (weights.repeat(subdivisions) / subdivisions)
    ww = w.unsqueeze(-1) * w
    n_nodes = t.shape[0]
    block = max(1, (1 << 20) // (n_nodes * n_nodes))
    out = []
    for i in range(0, start_a.shape[0], block):
        pa = start_a[i:i+block].unsqueeze(1)\
            + t.unsqueeze(-1) * dir_a[i:i+block].unsqueeze(1)
        pb = start_b[i:i+block].unsqueeze(1)\
            + t.unsqueeze(-1) * dir_b[i:i+block].unsqueeze(1)
        r = _distance_matrix(pa, pb)
        if regularization:
            r = torch.sqrt(r * r + regularization * regularization)
        out.append(torch.sum(ww / r, dim=(-1, -2)))
    if not out:
        return torch.zeros(0, dtype=DTYPE)
    return torch.cat(out)

def _refine(start_a, dir_a, start_b, dir_b, regularization, value):
    # halve the quadrature pieces until every pair settles
    active = torch.arange(value.shape[0])
    level = 0
    while len(active) and level < MAX_REFINE_LEVEL:
        level += 1
        new = _pair_integrals(start_a[active], dir_a[active],
                              start_b[active], dir_b[active],
                              regularization, 1 << level)
        settled = torch.abs(new - value[active])\
            <= REFINE_TOLERANCE * torch.abs(new)
        value[active] = new
        active = active[~settled]
    if len(active):
        logger.debug('%d segment pairs unsettled at refinement level %d',
                     len(active), level)
    return value

def _segment_distances(p1, d1, p2, d2):
    # closest distance between segments p1 + s d1 and p2 + t d2
    r = p1 - p2
    a = torch.sum(d1 * d1, dim=-1)
    e = torch.sum(d2 * d2, dim=-1)
    b = torch.sum(d1 * d2, dim=-1)
    c = torch.sum(d1 * r, dim=-1)
    f = torch.sum(d2 * r, dim=-1)
    denom = a * e - b * b
    parallel = denom <= 1e-12 * a * e
    s = torch.where(parallel, torch.zeros_like(a),
                    torch.clamp((b * f - c * e) / torch.where(parallel, a * e, denom),
                                0., 1.))
    t = (b * s + f) / e
    s = torch.where(t < 0, torch.clamp(-c / a, 0., 1.), s)
    s = torch.where(t > 1, torch.clamp((b - c) / a, 0., 1.), s)
    t = torch.clamp(t, 0., 1.)
    return torch.linalg.norm(r + s.unsqueeze(-1) * d1 - t.unsqueeze(-1) * d2,
                             dim=-1)

def _neumann_sum(path_a, path_b, regularization=0., self_term=False,
                 clearance=None):
    '''
    sum_ij (dl_i . dl_j) * integral 1/r over segment pairs, with near pairs
    adaptively refined. For self_term the diagonal pairs are skipped.
    '''
    start_a, end_a = path_a.segments()
    start_b, end_b = path_b.segments()
    dir_a, dir_b = end_a - start_a, end_b - start_b
    len_a = torch.linalg.norm(dir_a, dim=-1)
    len_b = torch.linalg.norm(dir_b, dim=-1)
    mid_a, mid_b = (start_a + end_a) / 2, (start_b + end_b) / 2
    nodes, weights = _gauss_legendre(QUADRATURE_ORDER)
    ww = weights.unsqueeze(-1) * weights
    q = QUADRATURE_ORDER
    pb = (start_b.unsqueeze(1)
          + nodes.unsqueeze(-1) * dir_b.unsqueeze(1)).reshape(-1, 3)

    total = torch.zeros((), dtype=DTYPE)
    near_i, near_j = [], []
    for i0 in range(0, start_a.shape[0], ROW_BLOCK):
        rows = slice(i0, i0 + ROW_BLOCK)
        n_rows = mid_a[rows].shape[0]
        mid_distance = _distance_matrix(mid_a[rows], mid_b)
        if clearance is not None:
            candidates = torch.nonzero(
                mid_distance <= (len_a[rows].unsqueeze(-1) + len_b) / 2
                + clearance)
            if len(candidates):
                ci, cj = candidates[:, 0] + i0, candidates[:, 1]
                distance = _segment_distances(start_a[ci], dir_a[ci],
                                              start_b[cj], dir_b[cj])
                hit = torch.nonzero(distance <= clearance)
                if len(hit):
                    k = int(hit[0])
                    raise ProximityError(
                        f'segment {int(ci[k])} of the first path comes within '
                        f'{clearance} m of segment {int(cj[k])} of the second',
                        segment_index=int(ci[k])
                    )
        pa = (start_a[rows].unsqueeze(1)
              + nodes.unsqueeze(-1) * dir_a[rows].unsqueeze(1)).reshape(-1, 3)
        r = _distance_matrix(pa, pb)
        if regularization:
            r = torch.sqrt(r * r + regularization * regularization)
        r = r.reshape(n_rows, q, -1, q).transpose(1, 2)
        integral = torch.sum(ww / r, dim=(-1, -2))
        dots = dir_a[rows] @ dir_b.T
        near = mid_distance < 2 * (len_a[rows].unsqueeze(-1) + len_b)
        if self_term:
            diagonal = torch.arange(n_rows)
            near[diagonal, diagonal + i0] = False
        contribution = dots * integral
        if self_term:
            contribution[diagonal, diagonal + i0] = 0.
        contribution = torch.where(near, torch.zeros_like(contribution),
                                   contribution)
        total = total + torch.sum(contribution)
        pairs = torch.nonzero(near)
        near_i.append(pairs[:, 0] + i0)
        near_j.append(pairs[:, 1])

    near_i, near_j = torch.cat(near_i), torch.cat(near_j)
    if len(near_i):
        initial = _pair_integrals(start_a[near_i], dir_a[near_i],
                                  start_b[near_j], dir_b[near_j],
                                  regularization, 1)
        refined = _refine(start_a[near_i], dir_a[near_i],
                          start_b[near_j], dir_b[near_j],
                          regularization, initial)
        dots = torch.sum(dir_a[near_i] * dir_b[near_j], dim=-1)
        total = total + torch.sum(dots * refined)
    logger.debug('neumann sum: %d x %d segments, %d near pairs',
                 len(len_a), len(len_b), len(near_i))
    return total

def _canonical_key(path):
    return (path.vertices.numpy().tobytes(), path.wire_radius, path.closed)

def mutual_inductance(path_a, path_b):
    # order the arguments so that the sum is evaluated identically either way
    if _canonical_key(path_a) > _canonical_key(path_b):
        path_a, path_b = path_b, path_a
    clearance = max(path_a.wire_radius, path_b.wire_radius)
    total = _neumann_sum(path_a, path_b, clearance=clearance)
    return float(MU0 / (4 * math.pi) * total)

def _segment_self_term(length, wire_radius):
    # exact double integral of the regularized kernel along one straight segment
    a = wire_radius
    return 2 * (length * torch.asinh(length / a)
                - torch.sqrt(length * length + a * a) + a)

def self_inductance(path):
    vertices = path.vertices
    size = float(torch.linalg.norm(vertices.max(dim=0).values
                                   - vertices.min(dim=0).values))
    if path.wire_radius >= size / 4:
        raise DiscretizationError(
            f'wire_radius {path.wire_radius} m is too thick for a path of '
            f'size {size} m; resampling to a finer max_segment_length cannot '
            'fix this, use a thinner wire or a larger coil so that '
            'wire_radius < size/4'
        )
    total = _neumann_sum(path, path, regularization=path.wire_radius,
                         self_term=True)
    total = total + torch.sum(
        _segment_self_term(path.segment_lengths(), path.wire_radius))
    return float(MU0 / (4 * math.pi) * total)

'''
Resistance
'''

def skin_depth(conductor, frequency):
    if conductor.resistivity is None:
        raise ParameterDomainError(
            f'conductor {conductor.name} has no resistivity')
    if not (math.isfinite(frequency) and frequency > 0):
        raise ParameterDomainError('frequency must be positive')
    return math.sqrt(2 * conductor.resistivity
                     / (2 * math.pi * frequency * MU0
                        * conductor.relative_permeability))

def dc_resistance(path, conductor):
    length = path_length(path)
    if conductor.resistance_per_length_override is not None:
        return conductor.resistance_per_length_override * length
    a = path.wire_radius
    return conductor.resistivity * length / (math.pi * a * a)

def ac_resistance(path, conductor, frequency):
    if not (math.isfinite(frequency) and frequency > 0):
        raise ParameterDomainError('frequency must be positive')
    if conductor.resistance_per_length_override is not None:
        return dc_resistance(path, conductor)
    a = path.wire_radius
    delta = skin_depth(conductor, frequency)
    if delta >= a:
        return dc_resistance(path, conductor)
    return conductor.resistivity * path_length(path)\
        / (math.pi * (2 * a * delta - delta * delta))
