import csv
import math
import logging
from dataclasses import dataclass

import numpy as np
import torch
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from torchmeander.errors import GeometryError
from torchmeander.errors import ParameterDomainError

logger = logging.getLogger(__name__)

DTYPE = torch.float64
PLANAR_TOLERANCE = 1e-9

def as_vector(value, name='vector', size=3):
    v = torch.as_tensor(value, dtype=DTYPE)
    if v.shape != (size,) or not torch.all(torch.isfinite(v)):
        raise ParameterDomainError(f'{name} must be a finite {size}-vector')
    return v

def unit_vector(value, name='vector', size=3):
    v = as_vector(value, name, size)
    norm = torch.linalg.norm(v)
    if norm == 0:
        raise ParameterDomainError(f'{name} must be non-zero')
    return v / norm

def orthonormal_frame(normal):
    # (e1, e2) spanning the plane perpendicular to normal, e1 x e2 = normal
    helper = torch.zeros(3, dtype=DTYPE)
    helper[torch.argmin(normal.abs())] = 1.
    e1 = helper - torch.dot(helper, normal) * normal
    e1 = e1 / torch.linalg.norm(e1)
    e2 = torch.linalg.cross(normal, e1)
    return e1, e2

# vertices: (n_vertices, 3), meters
@dataclass(frozen=True, eq=False)
class WirePath:
    vertices: torch.Tensor
    wire_radius: float
    closed: bool = False

    def __post_init__(self):
        vertices = torch.as_tensor(self.vertices, dtype=DTYPE)
        object.__setattr__(self, 'vertices', vertices)
        object.__setattr__(self, 'wire_radius', float(self.wire_radius))
        object.__setattr__(self, 'closed', bool(self.closed))
        if vertices.dim() != 2 or vertices.shape[1] != 3:
            raise GeometryError('vertices must have shape (n, 3)')
        if vertices.shape[0] < 2:
            raise GeometryError('a wire path needs at least 2 vertices')
        if not torch.all(torch.isfinite(vertices)):
            raise GeometryError('vertices must be finite')
        if not (math.isfinite(self.wire_radius) and self.wire_radius > 0):
            raise ParameterDomainError('wire_radius must be positive')
        lengths = self.segment_lengths()
        degenerate = torch.nonzero(lengths <= 0)
        if len(degenerate):
            raise GeometryError(
                f'segment {int(degenerate[0])} has zero length '
                '(consecutive vertices coincide)'
            )

    @property
    def n_segments(self):
        return self.vertices.shape[0] if self.closed\
            else self.vertices.shape[0] - 1

    def segments(self):
        if self.closed:
            return self.vertices, torch.roll(self.vertices, -1, dims=0)
        return self.vertices[:-1], self.vertices[1:]

    def segment_lengths(self):
        start, end = self.segments()
        return torch.linalg.norm(end - start, dim=-1)

    def translated(self, offset):
        return WirePath(
            self.vertices + as_vector(offset, 'offset'),
            self.wire_radius, self.closed
        )

    def scaled(self, factor):
        return WirePath(
            self.vertices * factor, self.wire_radius * factor, self.closed)

    def area_centroid(self):
        '''
        Centroid of the area covered by the coil: the convex hull of the
        vertices projected onto their best-fit plane.
        '''
        mean = self.vertices.mean(dim=0)
        e1, e2 = orthonormal_frame(self.plane_normal())
        centered = self.vertices - mean
        uv = torch.stack((centered @ e1, centered @ e2), dim=-1).numpy()
        try:
            hull = ConvexHull(uv)
        except QhullError as e:
            raise GeometryError('the coil footprint has no area') from e
        # shoelace over the counterclockwise hull
        u, v = uv[hull.vertices].T
        u_next, v_next = np.roll(u, -1), np.roll(v, -1)
        cross = u * v_next - u_next * v
        area = cross.sum() / 2
        cu = float(((u + u_next) * cross).sum() / (6 * area))
        cv = float(((v + v_next) * cross).sum() / (6 * area))
        return mean + cu * e1 + cv * e2

    def plane_normal(self):
        centered = self.vertices - self.vertices.mean(dim=0)
        _, _, vh = torch.linalg.svd(centered, full_matrices=True)
        normal = vh[-1]
        if normal[torch.argmax(normal.abs())] < 0:
            normal = -normal
        return normal / torch.linalg.norm(normal)

    def is_planar(self, tolerance=PLANAR_TOLERANCE):
        return bool(torch.all(self.vertices[:, 2].abs() <= tolerance))

    def extent(self, direction):
        projection = self.vertices @ as_vector(direction, 'direction')
        return float(projection.max() - projection.min())

def path_length(path):
    return float(torch.sum(path.segment_lengths()))

'''
Coil generators
'''

@dataclass(frozen=True)
class MeanderSpec:
    footprint_x: float = 0.3
    footprint_y: float = 0.2
    pitch: float = 0.05
    wire_radius: float = 5e-4
    corner_samples: int = 32

    def validate(self):
        for name in ('footprint_x', 'footprint_y', 'pitch', 'wire_radius'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterDomainError(f'{name} must be positive')
        if self.pitch <= 2 * self.wire_radius:
            raise ParameterDomainError(
                'pitch must exceed 2*wire_radius '
                f'(pitch={self.pitch}, wire_radius={self.wire_radius})'
            )
        if self.footprint_y < 2 * self.pitch:
            raise ParameterDomainError(
                'footprint_y must be at least 2*pitch (3 long runs)')
        if self.footprint_x <= self.pitch:
            raise ParameterDomainError('footprint_x must exceed pitch')
        if int(self.corner_samples) != self.corner_samples\
           or self.corner_samples < 2:
            raise ParameterDomainError('corner_samples must be an integer >= 2')
        return self

    @property
    def n_runs(self):
        return math.floor(self.footprint_y / self.pitch + 1e-9) + 1

@dataclass(frozen=True)
class HelixSpec:
    radius: float = 0.15
    turns: float = 3.
    pitch_per_turn: float = 0.01
    axis: tuple = (0., 0., 1.)
    samples_per_turn: int = 64
    wire_radius: float = 5e-4
    center: tuple = (0., 0., 0.)

    def validate(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ParameterDomainError('radius must be positive')
        if not (math.isfinite(self.turns) and self.turns >= 1):
            raise ParameterDomainError('turns must be >= 1')
        if not math.isfinite(self.pitch_per_turn) or self.pitch_per_turn < 0:
            raise ParameterDomainError('pitch_per_turn must be non-negative')
        if int(self.samples_per_turn) != self.samples_per_turn\
           or self.samples_per_turn < 16:
            raise ParameterDomainError('samples_per_turn must be an integer >= 16')
        if not (math.isfinite(self.wire_radius) and self.wire_radius > 0):
            raise ParameterDomainError('wire_radius must be positive')
        unit_vector(self.axis, 'axis')
        as_vector(self.center, 'center')
        return self

@dataclass(frozen=True)
class LoopSpec:
    radius: float = 0.1
    center: tuple = (0., 0., 0.)
    normal: tuple = (0., 0., 1.)
    segments: int = 512
    wire_radius: float = 1e-3

    def validate(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ParameterDomainError('radius must be positive')
        if int(self.segments) != self.segments or self.segments < 8:
            raise ParameterDomainError('segments must be an integer >= 8')
        if not (math.isfinite(self.wire_radius) and self.wire_radius > 0):
            raise ParameterDomainError('wire_radius must be positive')
        unit_vector(self.normal, 'normal')
        as_vector(self.center, 'center')
        return self

def footprint_diameter(spec):
    if isinstance(spec, MeanderSpec):
        return max(spec.footprint_x, spec.footprint_y)
    if isinstance(spec, HelixSpec):
        return 2 * spec.radius
    if isinstance(spec, LoopSpec):
        return 2 * spec.radius
    raise ParameterDomainError(f'no footprint for {type(spec).__name__}')

def build_meander(spec):
    spec.validate()
    n_runs = spec.n_runs
    r = spec.pitch / 2
    corner = int(spec.corner_samples)
    # interior angles of each turnaround, endpoints are the run ends
    theta = torch.linspace(-math.pi / 2, math.pi / 2, corner + 1, dtype=DTYPE)[1:-1]

    points = []
    for k in range(n_runs):
        y = k * spec.pitch
        x_start, x_end = (0., spec.footprint_x) if k % 2 == 0\
            else (spec.footprint_x, 0.)
        points.append(torch.tensor([[x_start, y, 0.], [x_end, y, 0.]], dtype=DTYPE))
        if k == n_runs - 1:
            break
        yc = y + r
        if k % 2 == 0:
            xs = x_end + r * torch.cos(theta)
        else:
            xs = x_end - r * torch.cos(theta)
        ys = yc + r * torch.sin(theta)
        points.append(torch.stack((xs, ys, torch.zeros_like(xs)), dim=-1))
    vertices = torch.cat(points)
    logger.debug('meander: %d runs, %d vertices', n_runs, len(vertices))
    return WirePath(vertices, spec.wire_radius, closed=False)

def build_path(spec):
    if isinstance(spec, MeanderSpec):
        return build_meander(spec)
    if isinstance(spec, HelixSpec):
        return build_helix(spec)
    if isinstance(spec, LoopSpec):
        return build_loop(spec)
    raise ParameterDomainError(f'unknown coil spec {type(spec).__name__}')

def build_helix(spec):
    spec.validate()
    axis = unit_vector(spec.axis, 'axis')
    e1, e2 = orthonormal_frame(axis)
    n = max(1, int(round(spec.samples_per_turn * spec.turns)))
    theta = torch.linspace(0., 2 * math.pi * spec.turns, n + 1, dtype=DTYPE)
    advance = spec.pitch_per_turn * theta / (2 * math.pi)
    vertices = as_vector(spec.center, 'center')\
        + spec.radius * torch.cos(theta).unsqueeze(-1) * e1\
        + spec.radius * torch.sin(theta).unsqueeze(-1) * e2\
        + advance.unsqueeze(-1) * axis
    return WirePath(vertices, spec.wire_radius, closed=False)

def build_loop(spec):
    spec.validate()
    normal = unit_vector(spec.normal, 'normal')
    e1, e2 = orthonormal_frame(normal)
    n = int(spec.segments)
    theta = 2 * math.pi * torch.arange(n, dtype=DTYPE) / n
    vertices = as_vector(spec.center, 'center')\
        + spec.radius * torch.cos(theta).unsqueeze(-1) * e1\
        + spec.radius * torch.sin(theta).unsqueeze(-1) * e2
    return WirePath(vertices, spec.wire_radius, closed=True)

'''
Discretization and deformation
'''

def resample(path, max_segment_length):
    if not (math.isfinite(max_segment_length) and max_segment_length > 0):
        raise ParameterDomainError('max_segment_length must be positive')
    start, end = path.segments()
    lengths = torch.linalg.norm(end - start, dim=-1)
    # the 1e-12 slack keeps resample idempotent under rounding
    counts = torch.clamp(
        torch.ceil(lengths / max_segment_length * (1 - 1e-12)), min=1
    ).long()
    if torch.all(counts == 1):
        return path
    segment_index = torch.repeat_interleave(torch.arange(len(counts)), counts)
    offsets = torch.cumsum(counts, dim=0) - counts
    local = torch.arange(int(counts.sum())) - offsets[segment_index]
    t = (local.to(DTYPE) / counts[segment_index].to(DTYPE)).unsqueeze(-1)
    vertices = start[segment_index] + t * (end - start)[segment_index]
    if not path.closed:
        vertices = torch.cat((vertices, path.vertices[-1:]))
    return WirePath(vertices, path.wire_radius, path.closed)

def bend_around_cylinder(path, bend_radius, axis_direction,
                         center=None, max_segment_length=None):
    '''
    Wrap a path lying in the z=0 plane onto a cylinder of radius bend_radius.

    The cylinder axis is parallel to axis_direction (a 2D direction in the
    coil plane) and passes at z=-bend_radius below `center`. Arc length
    along the bend direction is kept: every segment is rotated rigidly by
    the cylinder frame at its midpoint and the segments are chained, so
    segment lengths are preserved exactly. Segments are first resampled to
    max_segment_length (default 0.02 * bend_radius).
    '''
    if math.isinf(bend_radius) and bend_radius > 0:
        return path
    if not (math.isfinite(bend_radius) and bend_radius > 0):
        raise ParameterDomainError('bend_radius must be positive')
    if not path.is_planar():
        raise GeometryError(
            f'path must lie in the z=0 plane within {PLANAR_TOLERANCE} m')
    axis = unit_vector(axis_direction, 'axis_direction', size=2)
    axis3 = torch.tensor([axis[0], axis[1], 0.], dtype=DTYPE)
    bend3 = torch.tensor([axis[1], -axis[0], 0.], dtype=DTYPE)
    normal3 = torch.tensor([0., 0., 1.], dtype=DTYPE)

    extent = path.extent(bend3)
    if bend_radius <= extent / math.pi:
        raise GeometryError(
            f'bend_radius {bend_radius} m is too small for an extent of '
            f'{extent} m (must exceed extent/pi, self-intersection)'
        )
    if center is None:
        center = (path.vertices.max(dim=0).values
                  + path.vertices.min(dim=0).values) / 2
    center = as_vector(center, 'center')
    center = torch.tensor([center[0], center[1], 0.], dtype=DTYPE)

    if max_segment_length is None:
        max_segment_length = 0.02 * bend_radius
    path = resample(path, max_segment_length)
    flat = path.vertices - center
    flat = flat - (flat @ normal3).unsqueeze(-1) * normal3
    s = flat @ bend3
    t = flat @ axis3

    # exact cylinder image of the first vertex
    phi0 = s[0] / bend_radius
    first = center + t[0] * axis3 + bend_radius * torch.sin(phi0) * bend3\
        + bend_radius * (torch.cos(phi0) - 1) * normal3

    if path.closed:
        s_next, t_next = torch.roll(s, -1), torch.roll(t, -1)
    else:
        s_next, t_next = s[1:], t[1:]
        s, t = s[:-1], t[:-1]
    ds = (s_next - s).unsqueeze(-1)
    dt = (t_next - t).unsqueeze(-1)
    phi = ((s + s_next) / (2 * bend_radius)).unsqueeze(-1)
    steps = ds * (torch.cos(phi) * bend3 - torch.sin(phi) * normal3)\
        + dt * axis3
    if path.closed:
        # the closing step is implied by the first vertex
        steps = steps[:-1]
    vertices = torch.cat((first.unsqueeze(0), first + torch.cumsum(steps, dim=0)))
    logger.debug(
        'bent %d vertices onto radius %g m', len(vertices), bend_radius)
    return WirePath(vertices, path.wire_radius, path.closed)

@dataclass(frozen=True)
class DeformSpec:
    bend_radius: float = math.inf
    axis_direction: tuple = (0., 1.)
    max_segment_length: float = None

    def validate(self):
        if not self.bend_radius > 0:
            raise ParameterDomainError('bend_radius must be positive')
        unit_vector(self.axis_direction, 'axis_direction', size=2)
        if self.max_segment_length is not None\
           and not (math.isfinite(self.max_segment_length)
                    and self.max_segment_length > 0):
            raise ParameterDomainError('max_segment_length must be positive')
        return self

def deform_path(path, deform):
    if deform is None:
        return path
    deform.validate()
    return bend_around_cylinder(path, deform.bend_radius,
                                deform.axis_direction,
                                max_segment_length=deform.max_segment_length)

'''
CSV export
'''

def write_path_csv(path, f):
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(('x', 'y', 'z'))
    for x, y, z in path.vertices.tolist():
        writer.writerow((repr(x), repr(y), repr(z)))

def read_path_csv(f, wire_radius, closed=False):
    reader = csv.reader(f)
    header = next(reader)
    if [h.strip() for h in header] != ['x', 'y', 'z']:
        raise GeometryError('path CSV header must be x,y,z')
    rows = [[float(v) for v in row] for row in reader if row]
    return WirePath(torch.tensor(rows, dtype=DTYPE), wire_radius, closed)
