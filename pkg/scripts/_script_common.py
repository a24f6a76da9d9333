
import os
import sys
import math
import logging

import torch

def add_general_argument(parser):
    parser.add_argument('--threads', default='1', help='worker threads for field and sweep evaluation (n or auto)')
    parser.add_argument('--frequency', type=float, help='design frequency in Hz (default 13.56e6 or the scene value)')
    parser.add_argument('--log-file', help='log file')
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    return parser

def validate_general_argument(args, parser):
    if args.threads == 'auto':
        args.threads = os.cpu_count() or 1
    else:
        try:
            args.threads = int(args.threads)
        except ValueError:
            parser.error('--threads is a positive integer or auto')
    if args.threads <= 0:
        parser.error('--threads is positive')
    if args.frequency is not None and not args.frequency > 0:
        parser.error('--frequency is positive')
    # one intra-op thread keeps chunk sums identical for any --threads
    torch.set_num_threads(1)

    level = logging.DEBUG if args.verbose\
        else logging.INFO if args.log_file else logging.WARNING
    handler = logging.FileHandler(args.log_file) if args.log_file\
        else logging.StreamHandler(sys.stderr)
    logging.basicConfig(
        level=level, handlers=[handler],
        format='%(asctime)s %(name)s %(levelname)s %(message)s'
    )
    return args

def add_io_argument(parser):
    parser.add_argument('--scene', required=True, help='input scene JSON file')
    parser.add_argument('--out', required=True, help='output file')
    return parser

def validate_io_argument(args, parser):
    if os.path.isdir(args.out):
        parser.error(f'"{args.out}" is a directory')
    return args

def add_current_argument(parser):
    parser.add_argument('--current', type=float, help='coil current in A (default: scene value or 1)')
    return parser

def validate_current_argument(args, parser):
    if args.current is not None and not math.isfinite(args.current):
        parser.error('--current is a finite number')
    return args

def add_retune_argument(parser):
    parser.add_argument('--retune', action='store_true', help='re-tune capacitors after deformation')
    return parser
