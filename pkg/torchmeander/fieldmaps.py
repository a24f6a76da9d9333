import csv
import math
import logging
from dataclasses import dataclass

import numpy as np
import torch
from sklearn.linear_model import LinearRegression

from torchmeander.errors import AnalysisError
from torchmeander.errors import ParameterDomainError
from torchmeander.errors import ProximityError
from torchmeander.geometry import DTYPE
from torchmeander.geometry import as_vector
from torchmeander.geometry import orthonormal_frame
from torchmeander.magnetics import FieldSample
from torchmeander.magnetics import b_field

logger = logging.getLogger(__name__)

SKIN_STANDOFF = 5e-3
MIN_FIT_SAMPLES = 4

# sample (i, j) at origin + i*spacing*axis_u + j*spacing*axis_v,
# stored row-major with flat index i*nv + j
@dataclass(frozen=True, eq=False)
class GridSpec:
    origin: tuple
    axis_u: tuple
    axis_v: tuple
    nu: int
    nv: int
    spacing: float

    def validate(self):
        u = as_vector(self.axis_u, 'axis_u')
        v = as_vector(self.axis_v, 'axis_v')
        as_vector(self.origin, 'origin')
        if abs(float(torch.dot(u, v))) >= 1e-12:
            raise ParameterDomainError('axis_u and axis_v must be orthogonal')
        for name, axis in (('axis_u', u), ('axis_v', v)):
            if abs(float(torch.linalg.norm(axis)) - 1) > 1e-12:
                raise ParameterDomainError(f'{name} must be a unit vector')
        for name in ('nu', 'nv'):
            n = getattr(self, name)
            if int(n) != n or n < 1:
                raise ParameterDomainError(f'{name} must be a positive integer')
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ParameterDomainError('spacing must be positive')
        return self

    def coordinates(self):
        # (nu*nv, 2) in-plane coordinates (u, v)
        i = torch.arange(int(self.nu), dtype=DTYPE) * self.spacing
        j = torch.arange(int(self.nv), dtype=DTYPE) * self.spacing
        uu, vv = torch.meshgrid(i, j, indexing='ij')
        return torch.stack((uu.reshape(-1), vv.reshape(-1)), dim=-1)

    def points(self):
        uv = self.coordinates()
        return as_vector(self.origin, 'origin')\
            + uv[:, :1] * as_vector(self.axis_u, 'axis_u')\
            + uv[:, 1:] * as_vector(self.axis_v, 'axis_v')

    def with_size(self, nu, nv):
        return GridSpec(self.origin, self.axis_u, self.axis_v,
                        nu, nv, self.spacing)

@dataclass(frozen=True, eq=False)
class FieldGrid:
    spec: GridSpec
    points: torch.Tensor # (nu*nv, 3)
    B: torch.Tensor # (nu*nv, 3)

    @property
    def magnitudes(self):
        return torch.linalg.norm(self.B, dim=-1)

    def magnitude_map(self):
        # (nu, nv)
        return self.magnitudes.reshape(int(self.spec.nu), int(self.spec.nv))

    def samples(self):
        # row-major over (u, v)
        return [FieldSample(p, b) for p, b in zip(self.points, self.B)]

@dataclass(frozen=True, eq=False)
class DecayProfile:
    start: torch.Tensor
    direction: torch.Tensor
    depths: torch.Tensor
    magnitudes: torch.Tensor

    def index_of(self, depth):
        close = torch.nonzero(torch.abs(self.depths - depth)
                              <= 1e-12 * max(1., abs(depth)))
        if not len(close):
            raise AnalysisError(f'depth {depth} m is not sampled in the profile')
        return int(close[0])

def centered_grid(path, nu, nv, spacing, height=0.):
    '''
    Grid parallel to the best-fit plane of the path, centered above its
    areal centroid at `height` along the plane normal.
    '''
    normal = path.plane_normal()
    axis_u, axis_v = orthonormal_frame(normal)
    center = path.area_centroid() + height * normal
    origin = center - (nu - 1) / 2 * spacing * axis_u\
        - (nv - 1) / 2 * spacing * axis_v
    return GridSpec(tuple(origin.tolist()), tuple(axis_u.tolist()),
                    tuple(axis_v.tolist()), nu, nv, spacing)

def sample_plane(path, current, grid_spec, workers=1):
    grid_spec.validate()
    points = grid_spec.points()
    try:
        field = b_field(path, current, points, workers=workers)
    except ProximityError as e:
        i, j = divmod(e.point_index, int(grid_spec.nv))
        raise ProximityError(
            f'grid sample ({i}, {j}) lies within the wire radius '
            f'of segment {e.segment_index}',
            segment_index=e.segment_index, point_index=[i, j]
        ) from e
    logger.debug('sampled %dx%d grid', grid_spec.nu, grid_spec.nv)
    return FieldGrid(grid_spec, points, field)

def decay_profile(path, current, depths, start=None, direction=None,
                  workers=1):
    depths = torch.sort(torch.as_tensor(depths, dtype=DTYPE).reshape(-1)).values
    if len(depths) == 0:
        raise ParameterDomainError('at least one depth is required')
    if len(depths) > 1 and not torch.all(depths[1:] > depths[:-1]):
        raise ParameterDomainError('depths must be distinct')
    if not torch.all(depths > path.wire_radius):
        raise ParameterDomainError('depths must exceed the wire radius')
    # from the areal centroid of the coil unless a start is given
    start = path.area_centroid() if start is None\
        else as_vector(start, 'start')
    if direction is None:
        direction = path.plane_normal()
    else:
        direction = as_vector(direction, 'direction')
        direction = direction / torch.linalg.norm(direction)
    points = start + depths.unsqueeze(-1) * direction
    field = b_field(path, current, points, workers=workers)
    return DecayProfile(start, direction, depths,
                        torch.linalg.norm(field, dim=-1))

def fit_decay_rate(profile, window=None):
    '''
    Negated least-squares slope of ln|B| against depth over `window`
    (inclusive depth interval, whole profile by default), in 1/m.
    '''
    depths, magnitudes = profile.depths, profile.magnitudes
    if window is not None:
        lo, hi = window
        tol = 1e-12 * max(1., abs(lo), abs(hi))
        mask = (depths >= lo - tol) & (depths <= hi + tol)
        depths, magnitudes = depths[mask], magnitudes[mask]
    if len(depths) < MIN_FIT_SAMPLES:
        raise AnalysisError(
            f'{len(depths)} samples in the fit window, '
            f'at least {MIN_FIT_SAMPLES} are required'
        )
    if not torch.all(magnitudes > 0):
        raise AnalysisError('magnitudes must be positive to fit a decay rate')
    x = depths.numpy().reshape(-1, 1)
    y = np.log(magnitudes.numpy())
    regression = LinearRegression().fit(x, y)
    return float(-regression.coef_[0])

def confinement_ratio(profile, shallow, deep):
    if shallow > deep:
        raise ParameterDomainError('shallow depth must not exceed deep depth')
    b_shallow = profile.magnitudes[profile.index_of(shallow)]
    b_deep = profile.magnitudes[profile.index_of(deep)]
    if b_shallow <= 0:
        raise AnalysisError(f'field vanishes at depth {shallow} m')
    return float(b_deep / b_shallow)

def surface_field(path, current, standoff=SKIN_STANDOFF):
    # |B| at the skin standoff above the coil centroid
    point = path.area_centroid() + standoff * path.plane_normal()
    return float(torch.linalg.norm(b_field(path, current, point)[0]))

def write_grid_csv(grid, f):
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(('u', 'v', 'x', 'y', 'z', 'Bx', 'By', 'Bz', 'Bmag'))
    rows = torch.cat((grid.spec.coordinates(), grid.points, grid.B,
                      grid.magnitudes.unsqueeze(-1)), dim=-1)
    for row in rows.tolist():
        writer.writerow([repr(v) for v in row])

def write_profile_csv(profile, f):
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(('depth_m', 'Bmag_T'))
    for depth, magnitude in zip(profile.depths.tolist(),
                                profile.magnitudes.tolist()):
        writer.writerow((repr(depth), repr(magnitude)))
