
import os
import sys
import math
import logging

try:
    import torchmeander
except ImportError:
    # attempts to import local module
    sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
    import torchmeander
from torchmeander.errors import SceneError
from torchmeander.experiments import BEND_RADIUS_NOTE
from torchmeander.experiments import MILLIWATT_CLASS
from torchmeander.experiments import WATT_CLASS
from torchmeander.experiments import confinement_compare
from torchmeander.experiments import deformation_gate
from torchmeander.experiments import deformation_sweep
from torchmeander.experiments import input_hash
from torchmeander.experiments import material_compare
from torchmeander.experiments import optimization_log_to_csv
from torchmeander.experiments import optimize_trace
from torchmeander.experiments import parameter_sweep
from torchmeander.experiments import power_gate
from torchmeander.experiments import results_to_csv
from torchmeander.experiments import sweep_rows_to_csv

from _scene_io import load_scene_file
from _scene_io import open_output
from _scene_io import write_json
from _scene_io import write_metadata
from _link import scenario_dict

logger = logging.getLogger(__name__)

def power_class(delivered_power):
    if delivered_power >= WATT_CLASS:
        return 'W'
    if delivered_power >= MILLIWATT_CLASS:
        return 'mW'
    return 'below-mW'

def sweep(args):
    scene, data = load_scene_file(args)
    spec = scene.sweep
    if spec is None:
        raise SceneError('sweep', 'missing required field')
    if spec.parameter == 'bend_radius':
        rows = deformation_sweep(spec, workers=args.threads)
    else:
        rows = parameter_sweep(spec, workers=args.threads)
    with open_output(args.out) as fp:
        sweep_rows_to_csv(rows, fp)

    gates = {}
    if spec.parameter == 'bend_radius'\
       and any(math.isinf(row.value) for row in rows):
        gates['almost_same'] = deformation_gate(rows)
    weakest = min(row.delivered_power for row in rows)
    gates['power_class'] = {
        'minimum_delivered_power': weakest,
        'class': power_class(weakest),
        'mW_passed': weakest >= MILLIWATT_CLASS,
        'W_passed': weakest >= WATT_CLASS,
    }
    notes = {}
    if spec.parameter == 'bend_radius':
        notes['bend_radius'] = BEND_RADIUS_NOTE
    summary = {
        'scenario': scenario_dict(scene, spec.base_scenario),
        'parameter': spec.parameter,
        'retune': spec.retune,
        'rows': [row.as_dict() for row in rows],
        'gates': gates,
        'notes': notes,
        'input_hash': input_hash(data),
    }
    write_json(args.out + '.summary.json', summary)
    write_metadata(args, scene, data, notes=notes)

def default_gates(names):
    # mW-class delivery for yarn at 1 W and W-class for liquid metal at 2 W
    gates = []
    if 'yarn' in names:
        gates.append(('yarn', 1., MILLIWATT_CLASS))
    if 'liquid_metal' in names:
        gates.append(('liquid_metal', 2., WATT_CLASS))
    return gates

def compare(args):
    scene, data = load_scene_file(args)
    settings = scene.compare
    if settings is None:
        raise SceneError('compare', 'missing required field')
    out = {'input_hash': input_hash(data)}
    if settings.materials is not None:
        conductors = [scene.materials[name] for name in settings.materials]
        results = material_compare(scene.link, conductors,
                                   settings.input_power, workers=args.threads)
        by_name = dict(results)
        gates = [(g.conductor, g.input_power, g.minimum)
                 for g in settings.gates] or default_gates(by_name)
        out['scenario'] = scenario_dict(scene, scene.link)
        out['materials'] = [dict(conductor=name, **result.as_dict())
                            for name, result in results]
        out['ordering'] = [name for name, _ in sorted(
            results, key=lambda item: -item[1].eta_max)]
        out['gates'] = [dict(conductor=name,
                             **power_gate(by_name[name], input_power, minimum))
                        for name, input_power, minimum in gates]
        with open_output(args.out + '.materials.csv') as fp:
            results_to_csv(results, fp)
    if settings.confinement is not None:
        c = settings.confinement
        current = c.current if args.current is None else args.current
        comparison = confinement_compare(
            scene.coil(c.meander, 'compare.confinement.meander').geometry,
            scene.coil(c.helix, 'compare.confinement.helix').geometry,
            c.depths, current=current, shallow=c.shallow, deep=c.deep,
            window=c.window, workers=args.threads,
        )
        out['confinement'] = comparison.as_dict()
    write_json(args.out, out)
    write_metadata(args, scene, data)

def optimize(args):
    scene, data = load_scene_file(args)
    settings = scene.optimize
    if settings is None:
        raise SceneError('optimize', 'missing required field')
    result = optimize_trace(
        scene.link, settings.pitch, settings.wire_radius,
        objective=settings.objective, grid=settings.grid,
        rounds=settings.rounds, workers=args.threads,
    )
    with open_output(args.out) as fp:
        optimization_log_to_csv(result.log, fp)
    summary = result.as_dict()
    summary['scenario'] = scenario_dict(scene, scene.link)
    summary['pitch_range'] = list(settings.pitch)
    summary['wire_radius_range'] = list(settings.wire_radius)
    summary['input_hash'] = input_hash(data)
    write_json(args.out + '.summary.json', summary)
    write_metadata(args, scene, data)
