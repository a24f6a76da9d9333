
import os
import sys
import json
from dataclasses import replace

try:
    import torchmeander
except ImportError:
    # attempts to import local module
    sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
    import torchmeander
from torchmeander.scene import load_scene
from torchmeander.experiments import input_hash
from torchmeander.fieldmaps import SKIN_STANDOFF
from torchmeander.magnetics import MATERIALS_NOTE

TOOL_NAME = 'torch-meander'

def load_scene_file(args):
    scene, data = load_scene(args.scene)
    link = scene.link
    if link is not None:
        if getattr(args, 'frequency', None) is not None:
            link = replace(link, frequency=args.frequency)
        if getattr(args, 'retune', False):
            link = replace(link, retune=True)
    sweep = scene.sweep
    if sweep is not None:
        sweep = replace(sweep, base_scenario=link,
                        retune=sweep.retune or getattr(args, 'retune', False))
    return replace(scene, link=link, sweep=sweep), data

def open_output(path):
    return open(path, 'w', newline='')

def write_json(path, obj):
    with open_output(path) as fp:
        fp.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False))
        fp.write('\n')

def write_metadata(args, scene, data, summary=None, notes=None):
    '''
    Sidecar `<out>.meta.json` with everything needed to reproduce the output.
    '''
    frequency = scene.link.frequency if scene.link is not None\
        else args.frequency
    metadata = {
        'tool': TOOL_NAME,
        'version': torchmeander.__version__,
        'command': args.command,
        'scene': args.scene,
        'input_hash': input_hash(data),
        'materials': dict((name, conductor.as_dict())
                          for name, conductor in scene.materials.items()),
        'flags': {
            'frequency': frequency,
            'current': getattr(args, 'current', None),
            'retune': getattr(args, 'retune', None),
            'grid': getattr(args, 'grid', None),
        },
        'skin_standoff': SKIN_STANDOFF,
        'notes': dict(materials=MATERIALS_NOTE, **(notes or {})),
    }
    if summary is not None:
        metadata['summary'] = summary
    write_json(args.out + '.meta.json', metadata)
    return metadata
