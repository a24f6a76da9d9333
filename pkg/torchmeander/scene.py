'''
Scene documents: JSON files describing coils, materials and the studies
run on them. All quantities are SI; keys carry no unit suffixes.

    {
      "version": 1,
      "materials": {"yarn": {"resistance_per_length": 1.0}},
      "coils": {"tx": {"meander": {...}, "conductor": "liquid_metal"}, ...},
      "link": {"tx": "tx", "rx": "rx", "separation": 0.02, ...},
      "sweep": {"parameter": "bend_radius", "values": [null, 0.4, 0.2]},
      "field": {"coil": "tx", "grid": {...} | "centered": {...}},
      "profile": {"coil": "tx", "depths": [...] | {"start", "stop", "step"}},
      "compare": {"materials": [...], "confinement": {...}},
      "optimize": {"pitch": [lo, hi], "wire_radius": [lo, hi]}
    }

A coil may carry "deform": {"bend_radius", "axis_direction",
"max_segment_length"}; it applies to the geom, field and profile commands.
Link coils stay flat and are bent by a bend_radius sweep.

Bend radii given as null or "inf" denote the flat coil.
'''

import json
import math
import logging
from dataclasses import dataclass
from dataclasses import fields

from torchmeander.errors import ParameterDomainError
from torchmeander.errors import SceneError
from torchmeander.geometry import DeformSpec
from torchmeander.geometry import HelixSpec
from torchmeander.geometry import LoopSpec
from torchmeander.geometry import MeanderSpec
from torchmeander.fieldmaps import GridSpec
from torchmeander.magnetics import Conductor
from torchmeander.magnetics import load_materials
from torchmeander.experiments import OBJECTIVES
from torchmeander.experiments import SWEEP_PARAMETERS
from torchmeander.experiments import CoilConfig
from torchmeander.experiments import LinkScenario
from torchmeander.experiments import SweepSpec

logger = logging.getLogger(__name__)

SCENE_VERSION = 1
GEOMETRY_KINDS = {'meander': MeanderSpec, 'helix': HelixSpec, 'loop': LoopSpec}
VECTOR_FIELDS = ('axis', 'center', 'normal')

@dataclass(frozen=True)
class FieldSettings:
    coil: str
    current: float = 1.
    grid: GridSpec = None
    centered: dict = None

@dataclass(frozen=True)
class ProfileSettings:
    coil: str
    depths: tuple
    current: float = 1.
    window: tuple = None
    shallow: float = None
    deep: float = None

@dataclass(frozen=True)
class ConfinementSettings:
    meander: str
    helix: str
    depths: tuple
    current: float = 1.
    shallow: float = 0.01
    deep: float = 0.1
    window: tuple = None

@dataclass(frozen=True)
class PowerGate:
    conductor: str
    input_power: float
    minimum: float

@dataclass(frozen=True)
class CompareSettings:
    materials: tuple = None
    input_power: float = None
    gates: tuple = ()
    confinement: ConfinementSettings = None

@dataclass(frozen=True)
class OptimizeSettings:
    pitch: tuple
    wire_radius: tuple
    objective: str = 'eta_max'
    grid: int = 8
    rounds: int = 3

@dataclass(frozen=True)
class SceneDocument:
    version: int
    materials: dict
    coils: dict
    link: LinkScenario = None
    sweep: SweepSpec = None
    field: FieldSettings = None
    profile: ProfileSettings = None
    compare: CompareSettings = None
    optimize: OptimizeSettings = None

    def coil(self, name, where):
        if name not in self.coils:
            raise SceneError(where, f'unknown coil "{name}"')
        return self.coils[name]

'''
Field validators
'''

def _join(path, key):
    return f'{path}.{key}' if path else key

def _object(value, path):
    if not isinstance(value, dict):
        raise SceneError(path, 'expected an object')
    return value

def _known(d, allowed, path):
    for key in d:
        if key not in allowed:
            raise SceneError(_join(path, key), 'unknown field')

def _required(d, key, path):
    if key not in d:
        raise SceneError(_join(path, key), 'missing required field')
    return d[key]

def _number(value, path, positive=False, allow_inf=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneError(path, 'expected a number')
    value = float(value)
    if math.isinf(value) and allow_inf and value > 0:
        return value
    if not math.isfinite(value):
        raise SceneError(path, 'expected a finite number')
    if positive and value <= 0:
        raise SceneError(path, 'must be positive')
    return value

def _integer(value, path, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SceneError(path, 'expected an integer')
    if value < minimum:
        raise SceneError(path, f'must be >= {minimum}')
    return value

def _boolean(value, path):
    if not isinstance(value, bool):
        raise SceneError(path, 'expected true or false')
    return value

def _name(value, path):
    if not isinstance(value, str) or not value:
        raise SceneError(path, 'expected a name')
    return value

def _vector(value, path, size=3):
    if not isinstance(value, list) or len(value) != size:
        raise SceneError(path, f'expected a list of {size} numbers')
    return tuple(_number(v, f'{path}[{i}]') for i, v in enumerate(value))

def _interval(value, path):
    lo, hi = _vector(value, path, size=2)
    if lo > hi:
        raise SceneError(path, 'interval must satisfy min <= max')
    return lo, hi

def _bend_radius(value, path):
    if value is None or value == 'inf':
        return math.inf
    return _number(value, path, positive=True, allow_inf=True)

def _depths(value, path):
    if isinstance(value, dict):
        _known(value, ('start', 'stop', 'step'), path)
        start = _number(_required(value, 'start', path), _join(path, 'start'),
                        positive=True)
        stop = _number(_required(value, 'stop', path), _join(path, 'stop'),
                       positive=True)
        step = _number(_required(value, 'step', path), _join(path, 'step'),
                       positive=True)
        if stop < start:
            raise SceneError(path, 'stop must not be below start')
        n = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 12) for i in range(n))
    if not isinstance(value, list) or not value:
        raise SceneError(path, 'expected a non-empty list of depths')
    return tuple(_number(v, f'{path}[{i}]', positive=True)
                 for i, v in enumerate(value))

'''
Sections
'''

def _materials(document):
    materials = load_materials()
    overrides = _object(document.get('materials', {}), 'materials')
    for name, d in overrides.items():
        path = _join('materials', name)
        _object(d, path)
        _known(d, ('resistivity', 'relative_permeability',
                   'resistance_per_length'), path)
        for key, value in d.items():
            _number(value, _join(path, key), positive=True)
        try:
            materials[name] = Conductor.from_dict(name, d)
        except ParameterDomainError as e:
            raise SceneError(path, str(e))
    return materials

def _geometry(kind, d, path):
    cls = GEOMETRY_KINDS[kind]
    _object(d, path)
    names = [f.name for f in fields(cls)]
    _known(d, names, path)
    kwargs = dict()
    for key, value in d.items():
        where = _join(path, key)
        if key in VECTOR_FIELDS:
            kwargs[key] = _vector(value, where)
        elif key in ('corner_samples', 'samples_per_turn', 'segments'):
            kwargs[key] = _integer(value, where)
        else:
            kwargs[key] = _number(value, where)
    spec = cls(**kwargs)
    try:
        spec.validate()
    except ParameterDomainError as e:
        raise SceneError(path, str(e))
    return spec

def _deform(d, path):
    _object(d, path)
    _known(d, ('bend_radius', 'axis_direction', 'max_segment_length'), path)
    kwargs = dict(bend_radius=_bend_radius(_required(d, 'bend_radius', path),
                                           _join(path, 'bend_radius')))
    if 'axis_direction' in d:
        kwargs['axis_direction'] = _vector(
            d['axis_direction'], _join(path, 'axis_direction'), 2)
    if 'max_segment_length' in d:
        kwargs['max_segment_length'] = _number(
            d['max_segment_length'], _join(path, 'max_segment_length'),
            positive=True)
    spec = DeformSpec(**kwargs)
    try:
        spec.validate()
    except ParameterDomainError as e:
        raise SceneError(path, str(e))
    return spec

def _flat(coils, name, path):
    if coils[name].deform is not None:
        raise SceneError(path, f'coil "{name}" carries a deform section; '
                         'bend link coils with a bend_radius sweep')
    return coils[name]

def _coils(document, materials):
    coils = _object(_required(document, 'coils', ''), 'coils')
    if not coils:
        raise SceneError('coils', 'at least one coil is required')
    out = dict()
    for name, d in coils.items():
        path = _join('coils', name)
        _object(d, path)
        _known(d, tuple(GEOMETRY_KINDS) + ('conductor', 'deform'), path)
        kinds = [k for k in GEOMETRY_KINDS if k in d]
        if len(kinds) != 1:
            raise SceneError(path, 'exactly one of meander, helix, loop '
                             'is required')
        geometry = _geometry(kinds[0], d[kinds[0]], _join(path, kinds[0]))
        conductor = _name(d.get('conductor', 'copper'),
                          _join(path, 'conductor'))
        if conductor not in materials:
            raise SceneError(_join(path, 'conductor'),
                             f'unknown conductor "{conductor}"')
        deform = _deform(d['deform'], _join(path, 'deform'))\
            if 'deform' in d else None
        out[name] = CoilConfig(geometry, materials[conductor], deform)
    return out

def _link(d, coils):
    path = 'link'
    _object(d, path)
    _known(d, ('tx', 'rx', 'frequency', 'input_power', 'separation',
               'retune', 'bend_rx', 'axis_direction', 'max_segment_length'),
           path)
    def coil(key):
        name = _name(_required(d, key, path), _join(path, key))
        if name not in coils:
            raise SceneError(_join(path, key), f'unknown coil "{name}"')
        return _flat(coils, name, _join(path, key))
    kwargs = dict(tx=coil('tx'), rx=coil('rx'))
    for key in ('frequency', 'separation', 'max_segment_length'):
        if key in d:
            kwargs[key] = _number(d[key], _join(path, key), positive=True)
    if 'input_power' in d:
        kwargs['input_power'] = _number(d['input_power'],
                                        _join(path, 'input_power'))
        if kwargs['input_power'] < 0:
            raise SceneError(_join(path, 'input_power'),
                             'must not be negative')
    for key in ('retune', 'bend_rx'):
        if key in d:
            kwargs[key] = _boolean(d[key], _join(path, key))
    if 'axis_direction' in d:
        axis = _vector(d['axis_direction'], _join(path, 'axis_direction'), 2)
        if axis == (0., 0.):
            raise SceneError(_join(path, 'axis_direction'), 'must be non-zero')
        kwargs['axis_direction'] = axis
    return LinkScenario(**kwargs)

def _sweep(d, link):
    path = 'sweep'
    _object(d, path)
    _known(d, ('parameter', 'values', 'retune'), path)
    if link is None:
        raise SceneError(path, 'a sweep needs a link section')
    parameter = _required(d, 'parameter', path)
    if parameter not in SWEEP_PARAMETERS:
        raise SceneError(_join(path, 'parameter'),
                         f'must be one of {", ".join(SWEEP_PARAMETERS)}')
    values = _required(d, 'values', path)
    if not isinstance(values, list) or not values:
        raise SceneError(_join(path, 'values'), 'expected a non-empty list')
    where = lambda i: f'{path}.values[{i}]'
    if parameter == 'bend_radius':
        values = tuple(_bend_radius(v, where(i)) for i, v in enumerate(values))
    else:
        values = tuple(_number(v, where(i), positive=True)
                       for i, v in enumerate(values))
    retune = _boolean(d['retune'], _join(path, 'retune')) if 'retune' in d\
        else link.retune
    return SweepSpec(link, parameter, values, retune)

def _field(d, coils):
    path = 'field'
    _object(d, path)
    _known(d, ('coil', 'current', 'grid', 'centered'), path)
    name = _name(_required(d, 'coil', path), _join(path, 'coil'))
    if name not in coils:
        raise SceneError(_join(path, 'coil'), f'unknown coil "{name}"')
    current = _number(d.get('current', 1.), _join(path, 'current'))
    if ('grid' in d) == ('centered' in d):
        raise SceneError(path, 'exactly one of grid, centered is required')
    if 'grid' in d:
        g = _object(d['grid'], _join(path, 'grid'))
        gpath = _join(path, 'grid')
        _known(g, ('origin', 'axis_u', 'axis_v', 'nu', 'nv', 'spacing'), gpath)
        grid = GridSpec(
            _vector(_required(g, 'origin', gpath), _join(gpath, 'origin')),
            _vector(_required(g, 'axis_u', gpath), _join(gpath, 'axis_u')),
            _vector(_required(g, 'axis_v', gpath), _join(gpath, 'axis_v')),
            _integer(_required(g, 'nu', gpath), _join(gpath, 'nu')),
            _integer(_required(g, 'nv', gpath), _join(gpath, 'nv')),
            _number(_required(g, 'spacing', gpath), _join(gpath, 'spacing'),
                    positive=True),
        )
        try:
            grid.validate()
        except ParameterDomainError as e:
            raise SceneError(gpath, str(e))
        return FieldSettings(name, current, grid=grid)
    c = _object(d['centered'], _join(path, 'centered'))
    cpath = _join(path, 'centered')
    _known(c, ('nu', 'nv', 'spacing', 'height'), cpath)
    centered = {
        'nu': _integer(_required(c, 'nu', cpath), _join(cpath, 'nu')),
        'nv': _integer(_required(c, 'nv', cpath), _join(cpath, 'nv')),
        'spacing': _number(_required(c, 'spacing', cpath),
                           _join(cpath, 'spacing'), positive=True),
        'height': _number(c.get('height', 0.), _join(cpath, 'height')),
    }
    return FieldSettings(name, current, centered=centered)

def _profile(d, coils):
    path = 'profile'
    _object(d, path)
    _known(d, ('coil', 'current', 'depths', 'window', 'shallow', 'deep'), path)
    name = _name(_required(d, 'coil', path), _join(path, 'coil'))
    if name not in coils:
        raise SceneError(_join(path, 'coil'), f'unknown coil "{name}"')
    return ProfileSettings(
        name,
        _depths(_required(d, 'depths', path), _join(path, 'depths')),
        _number(d.get('current', 1.), _join(path, 'current')),
        _interval(d['window'], _join(path, 'window')) if 'window' in d else None,
        _number(d['shallow'], _join(path, 'shallow'), positive=True)
        if 'shallow' in d else None,
        _number(d['deep'], _join(path, 'deep'), positive=True)
        if 'deep' in d else None,
    )

def _confinement(d, coils, path):
    _object(d, path)
    _known(d, ('meander', 'helix', 'depths', 'current', 'shallow', 'deep',
               'window'), path)
    names = dict()
    for key, cls in (('meander', MeanderSpec), ('helix', HelixSpec)):
        name = _name(_required(d, key, path), _join(path, key))
        if name not in coils:
            raise SceneError(_join(path, key), f'unknown coil "{name}"')
        if not isinstance(coils[name].geometry, cls):
            raise SceneError(_join(path, key), f'coil "{name}" is not a {key}')
        _flat(coils, name, _join(path, key))
        names[key] = name
    return ConfinementSettings(
        names['meander'], names['helix'],
        _depths(_required(d, 'depths', path), _join(path, 'depths')),
        _number(d.get('current', 1.), _join(path, 'current')),
        _number(d.get('shallow', 0.01), _join(path, 'shallow'), positive=True),
        _number(d.get('deep', 0.1), _join(path, 'deep'), positive=True),
        _interval(d['window'], _join(path, 'window')) if 'window' in d else None,
    )

def _compare(d, coils, materials, link):
    path = 'compare'
    _object(d, path)
    _known(d, ('materials', 'input_power', 'gates', 'confinement'), path)
    if 'materials' not in d and 'confinement' not in d:
        raise SceneError(path, 'one of materials, confinement is required')
    names = None
    if 'materials' in d:
        if link is None:
            raise SceneError(_join(path, 'materials'),
                             'a material comparison needs a link section')
        values = d['materials']
        if not isinstance(values, list) or len(values) < 2:
            raise SceneError(_join(path, 'materials'),
                             'expected a list of at least 2 conductors')
        names = []
        for i, value in enumerate(values):
            where = f'{path}.materials[{i}]'
            name = _name(value, where)
            if name not in materials:
                raise SceneError(where, f'unknown conductor "{name}"')
            names.append(name)
        names = tuple(names)
    gates = []
    for i, g in enumerate(d.get('gates', [])):
        where = f'{path}.gates[{i}]'
        _object(g, where)
        _known(g, ('conductor', 'input_power', 'minimum'), where)
        conductor = _name(_required(g, 'conductor', where),
                          _join(where, 'conductor'))
        if names is None or conductor not in names:
            raise SceneError(_join(where, 'conductor'),
                             f'conductor "{conductor}" is not compared')
        gates.append(PowerGate(
            conductor,
            _number(_required(g, 'input_power', where),
                    _join(where, 'input_power'), positive=True),
            _number(_required(g, 'minimum', where), _join(where, 'minimum'),
                    positive=True),
        ))
    return CompareSettings(
        names,
        _number(d['input_power'], _join(path, 'input_power'), positive=True)
        if 'input_power' in d else None,
        tuple(gates),
        _confinement(d['confinement'], coils, _join(path, 'confinement'))
        if 'confinement' in d else None,
    )

def _optimize(d, link):
    path = 'optimize'
    _object(d, path)
    _known(d, ('pitch', 'wire_radius', 'objective', 'grid', 'rounds'), path)
    if link is None:
        raise SceneError(path, 'optimization needs a link section')
    objective = d.get('objective', 'eta_max')
    if objective not in OBJECTIVES:
        raise SceneError(_join(path, 'objective'),
                         f'must be one of {", ".join(OBJECTIVES)}')
    return OptimizeSettings(
        _interval(_required(d, 'pitch', path), _join(path, 'pitch')),
        _interval(_required(d, 'wire_radius', path), _join(path, 'wire_radius')),
        objective,
        _integer(d.get('grid', 8), _join(path, 'grid')),
        _integer(d.get('rounds', 3), _join(path, 'rounds'), minimum=0),
    )

def parse_scene(document):
    _object(document, '')
    _known(document, ('version', 'materials', 'coils', 'link', 'sweep',
                      'field', 'profile', 'compare', 'optimize'), '')
    version = _required(document, 'version', '')
    if version != SCENE_VERSION or isinstance(version, bool):
        raise SceneError('version', f'unsupported version {version!r}, '
                         f'expected {SCENE_VERSION}')
    materials = _materials(document)
    coils = _coils(document, materials)
    link = _link(document['link'], coils) if 'link' in document else None
    return SceneDocument(
        version=version,
        materials=materials,
        coils=coils,
        link=link,
        sweep=_sweep(document['sweep'], link) if 'sweep' in document else None,
        field=_field(document['field'], coils) if 'field' in document else None,
        profile=_profile(document['profile'], coils)
        if 'profile' in document else None,
        compare=_compare(document['compare'], coils, materials, link)
        if 'compare' in document else None,
        optimize=_optimize(document['optimize'], link)
        if 'optimize' in document else None,
    )

def load_scene(path):
    '''
    Read and validate a scene file; returns (SceneDocument, raw bytes).
    '''
    with open(path, 'rb') as fp:
        data = fp.read()
    document = json.loads(data.decode('utf-8'))
    scene = parse_scene(document)
    logger.debug('loaded scene %s with coils %s', path, sorted(scene.coils))
    return scene, data
