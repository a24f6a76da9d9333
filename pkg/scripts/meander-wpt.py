#!/usr/bin/env python

import sys
import json
from argparse import ArgumentParser

from _script_common import add_general_argument
from _script_common import validate_general_argument
from _script_common import add_io_argument
from _script_common import validate_io_argument
from _script_common import add_current_argument
from _script_common import validate_current_argument
from _script_common import add_retune_argument
from _geometry import add_coil_argument
from _geometry import add_geometry_argument
from _geometry import validate_geometry_argument
from _geometry import geom
from _fieldmap import add_grid_argument
from _fieldmap import validate_grid_argument
from _fieldmap import field
from _fieldmap import profile
from _link import link
from _study import sweep
from _study import compare
from _study import optimize

from torchmeander.errors import AnalysisError
from torchmeander.errors import ConfigurationError
from torchmeander.errors import DiscretizationError
from torchmeander.errors import GeometryError
from torchmeander.errors import ParameterDomainError
from torchmeander.errors import ProximityError
from torchmeander.errors import SceneError
from torchmeander.errors import error_record

COMMANDS = {
    'geom': geom,
    'field': field,
    'profile': profile,
    'link': link,
    'sweep': sweep,
    'compare': compare,
    'optimize': optimize,
}
VALIDATION_ERRORS = (SceneError, ParameterDomainError, ConfigurationError)
COMPUTATION_ERRORS = (ProximityError, GeometryError, DiscretizationError,
                      AnalysisError)

def report(record, status):
    sys.stderr.write(json.dumps(record, sort_keys=True) + '\n')
    return status

class MeanderArgumentParser(ArgumentParser):
    # usage errors are validation errors: exit 1 with a JSON record
    def error(self, message):
        sys.exit(report({'error': 'UsageError', 'message': message}, 1))

'''
Command line arguments
'''

def parse_args(argv=None):
    parser = MeanderArgumentParser(prog='meander-wpt')
    subparser = parser.add_subparsers(help='<<subcommand help>>', dest='command',
                                      parser_class=MeanderArgumentParser)
    subparser.required = True

    geom_parser = subparser.add_parser('geom', help='write the discretized coil centerline')
    add_general_argument(geom_parser.add_argument_group('general'))
    add_io_argument(geom_parser.add_argument_group('io'))
    geom_geometry_parser = geom_parser.add_argument_group('geometry')
    add_coil_argument(geom_geometry_parser)
    add_geometry_argument(geom_geometry_parser)

    field_parser = subparser.add_parser('field', help='sample |B| on a rectangular grid')
    add_general_argument(field_parser.add_argument_group('general'))
    add_io_argument(field_parser.add_argument_group('io'))
    field_field_parser = field_parser.add_argument_group('field')
    add_current_argument(field_field_parser)
    add_grid_argument(field_field_parser)

    profile_parser = subparser.add_parser('profile', help='sample |B| against depth')
    add_general_argument(profile_parser.add_argument_group('general'))
    add_io_argument(profile_parser.add_argument_group('io'))
    add_current_argument(profile_parser.add_argument_group('field'))

    link_parser = subparser.add_parser('link', help='evaluate the resonant link')
    add_general_argument(link_parser.add_argument_group('general'))
    add_io_argument(link_parser.add_argument_group('io'))
    add_retune_argument(link_parser.add_argument_group('link'))

    sweep_parser = subparser.add_parser('sweep', help='sweep one link parameter')
    add_general_argument(sweep_parser.add_argument_group('general'))
    add_io_argument(sweep_parser.add_argument_group('io'))
    add_retune_argument(sweep_parser.add_argument_group('link'))

    compare_parser = subparser.add_parser('compare', help='compare conductors and confinement')
    add_general_argument(compare_parser.add_argument_group('general'))
    add_io_argument(compare_parser.add_argument_group('io'))
    add_retune_argument(compare_parser.add_argument_group('link'))
    add_current_argument(compare_parser.add_argument_group('field'))

    optimize_parser = subparser.add_parser('optimize', help='search pitch and wire radius')
    add_general_argument(optimize_parser.add_argument_group('general'))
    add_io_argument(optimize_parser.add_argument_group('io'))
    add_retune_argument(optimize_parser.add_argument_group('link'))

    args = parser.parse_args(argv)
    validate_general_argument(args, parser)
    validate_io_argument(args, parser)
    if args.command == 'geom':
        validate_geometry_argument(args, parser)
    elif args.command == 'field':
        validate_current_argument(args, parser)
        validate_grid_argument(args, parser)
    elif args.command in ('profile', 'compare'):
        validate_current_argument(args, parser)
    return args

def run(argv=None):
    args = parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except VALIDATION_ERRORS as e:
        return report(error_record(e), 1)
    except COMPUTATION_ERRORS as e:
        return report(error_record(e), 2)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        return report({'error': type(e).__name__, 'message': str(e),
                       'path': args.scene}, 3)
    except OSError as e:
        record = {'error': type(e).__name__, 'message': str(e)}
        if e.filename is not None:
            record['path'] = e.filename
        return report(record, 3)
    return 0

def main():
    sys.exit(run())

if __name__ == '__main__':
    main()
