
import os
import sys
import logging

try:
    import torchmeander
except ImportError:
    # attempts to import local module
    sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
    import torchmeander
from torchmeander.errors import SceneError
from torchmeander.experiments import evaluate_scenario

from _scene_io import load_scene_file
from _scene_io import write_json
from _scene_io import write_metadata

logger = logging.getLogger(__name__)

def coil_name(scene, coil):
    for name, c in scene.coils.items():
        if c is coil:
            return name

def scenario_dict(scene, scenario):
    return {
        'tx': coil_name(scene, scenario.tx),
        'rx': coil_name(scene, scenario.rx),
        'tx_conductor': scenario.tx.conductor.name,
        'rx_conductor': scenario.rx.conductor.name,
        'frequency': scenario.frequency,
        'input_power': scenario.input_power,
        'separation': scenario.separation,
        'retune': scenario.retune,
        'max_segment_length': scenario.max_segment_length,
    }

def link(args):
    scene, data = load_scene_file(args)
    if scene.link is None:
        raise SceneError('link', 'missing required field')
    result = evaluate_scenario(scene.link)
    logger.info('eta_max=%.6g delivered_power=%.6g W',
                result.eta_max, result.delivered_power)
    write_json(args.out, {
        'scenario': scenario_dict(scene, scene.link),
        'result': result.as_dict(),
    })
    write_metadata(args, scene, data)
