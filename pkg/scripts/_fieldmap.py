
import os
import sys
import re
import logging

try:
    import torchmeander
except ImportError:
    # attempts to import local module
    sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
    import torchmeander
from torchmeander.errors import SceneError
from torchmeander.fieldmaps import centered_grid
from torchmeander.fieldmaps import confinement_ratio
from torchmeander.fieldmaps import decay_profile
from torchmeander.fieldmaps import fit_decay_rate
from torchmeander.fieldmaps import sample_plane
from torchmeander.fieldmaps import write_grid_csv
from torchmeander.fieldmaps import write_profile_csv

from _scene_io import load_scene_file
from _scene_io import open_output
from _scene_io import write_metadata

logger = logging.getLogger(__name__)

def add_grid_argument(parser):
    parser.add_argument('--grid', help='grid size override, NUxNV')
    return parser

def validate_grid_argument(args, parser):
    if args.grid is not None:
        match = re.fullmatch(r'(\d+)x(\d+)', args.grid)
        if match is None or int(match.group(1)) <= 0\
           or int(match.group(2)) <= 0:
            parser.error('--grid is NUxNV with positive integers')
        args.grid = (int(match.group(1)), int(match.group(2)))
    return args

def field(args):
    scene, data = load_scene_file(args)
    settings = scene.field
    if settings is None:
        raise SceneError('field', 'missing required field')
    coil = scene.coil(settings.coil, 'field.coil')
    path = coil.path()
    current = settings.current if args.current is None else args.current
    if settings.grid is not None:
        grid = settings.grid
        if args.grid is not None:
            grid = grid.with_size(*args.grid)
    else:
        nu, nv = args.grid or (settings.centered['nu'], settings.centered['nv'])
        grid = centered_grid(path, nu, nv, settings.centered['spacing'],
                             settings.centered['height'])
    result = sample_plane(path, current, grid, workers=args.threads)
    with open_output(args.out) as fp:
        write_grid_csv(result, fp)
    summary = {
        'coil': settings.coil,
        'current': current,
        'nu': int(grid.nu),
        'nv': int(grid.nv),
        'spacing': grid.spacing,
        'max_Bmag': float(result.magnitudes.max()),
    }
    logger.info('wrote %s: %dx%d samples', args.out, grid.nu, grid.nv)
    write_metadata(args, scene, data, summary)

def profile(args):
    scene, data = load_scene_file(args)
    settings = scene.profile
    if settings is None:
        raise SceneError('profile', 'missing required field')
    coil = scene.coil(settings.coil, 'profile.coil')
    path = coil.path()
    current = settings.current if args.current is None else args.current
    result = decay_profile(path, current, settings.depths,
                           workers=args.threads)
    with open_output(args.out) as fp:
        write_profile_csv(result, fp)
    summary = {
        'coil': settings.coil,
        'current': current,
        'start': result.start.tolist(),
        'direction': result.direction.tolist(),
    }
    if settings.window is not None:
        summary['window'] = list(settings.window)
        summary['decay_rate'] = fit_decay_rate(result, settings.window)
    if settings.shallow is not None and settings.deep is not None:
        summary['shallow'] = settings.shallow
        summary['deep'] = settings.deep
        summary['confinement_ratio'] = confinement_ratio(
            result, settings.shallow, settings.deep)
    write_metadata(args, scene, data, summary)
