
import os
import sys
import logging
from dataclasses import replace

try:
    import torchmeander
except ImportError:
    # attempts to import local module
    sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
    import torchmeander
from torchmeander.errors import SceneError
from torchmeander.experiments import json_float
from torchmeander.geometry import DeformSpec
from torchmeander.geometry import build_path
from torchmeander.geometry import deform_path
from torchmeander.geometry import path_length
from torchmeander.geometry import resample
from torchmeander.geometry import write_path_csv

from _scene_io import load_scene_file
from _scene_io import open_output
from _scene_io import write_metadata

logger = logging.getLogger(__name__)

def add_coil_argument(parser):
    parser.add_argument('--coil', help='coil name in the scene (default: the only coil, or the link transmitter)')
    return parser

def select_coil(scene, name):
    if name is not None:
        return name, scene.coil(name, 'coil')
    if len(scene.coils) == 1:
        return next(iter(scene.coils.items()))
    if scene.link is not None:
        for name, coil in scene.coils.items():
            if coil is scene.link.tx:
                return name, coil
    raise SceneError('coils', 'several coils defined, select one with --coil')

def add_geometry_argument(parser):
    parser.add_argument('--bend-radius', type=float, help='wrap the coil onto a cylinder of this radius in m')
    parser.add_argument('--axis-direction', help='cylinder axis direction in the coil plane, "x,y" (default: link value or 0,1)')
    parser.add_argument('--max-segment-length', type=float, help='resample to this segment length in m')
    return parser

def validate_geometry_argument(args, parser):
    if args.bend_radius is not None and not args.bend_radius > 0:
        parser.error('--bend-radius is positive')
    if args.max_segment_length is not None and not args.max_segment_length > 0:
        parser.error('--max-segment-length is positive')
    if args.axis_direction is not None:
        try:
            axis = tuple(float(v) for v in args.axis_direction.split(','))
        except ValueError:
            axis = ()
        if len(axis) != 2 or axis == (0., 0.):
            parser.error('--axis-direction is two comma separated numbers')
        args.axis_direction = axis
    return args

def geom(args):
    scene, data = load_scene_file(args)
    name, coil = select_coil(scene, args.coil)
    path = build_path(coil.geometry)
    if args.max_segment_length is not None:
        path = resample(path, args.max_segment_length)
    # flags override the coil's own deform section
    deform = coil.deform
    if args.bend_radius is not None:
        axis = args.axis_direction or (
            scene.link.axis_direction if scene.link is not None else (0., 1.))
        deform = DeformSpec(args.bend_radius, axis, args.max_segment_length)
    elif deform is not None and args.axis_direction is not None:
        deform = replace(deform, axis_direction=args.axis_direction)
    path = deform_path(path, deform)
    with open_output(args.out) as fp:
        write_path_csv(path, fp)
    summary = {
        'coil': name,
        'length': path_length(path),
        'segments': path.n_segments,
        'wire_radius': path.wire_radius,
        'closed': path.closed,
        'bend_radius': json_float(deform.bend_radius)
        if deform is not None else None,
    }
    logger.info('wrote %s: %d segments', args.out, path.n_segments)
    write_metadata(args, scene, data, summary)
