import csv
import math
import hashlib
import logging
from dataclasses import dataclass
from dataclasses import asdict
from dataclasses import fields
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from torchmeander.errors import AnalysisError
from torchmeander.errors import ConfigurationError
from torchmeander.errors import GeometryError
from torchmeander.errors import ParameterDomainError
from torchmeander.geometry import DeformSpec
from torchmeander.geometry import MeanderSpec
from torchmeander.geometry import bend_around_cylinder
from torchmeander.geometry import build_helix
from torchmeander.geometry import build_meander
from torchmeander.geometry import build_path
from torchmeander.geometry import deform_path
from torchmeander.geometry import footprint_diameter
from torchmeander.geometry import resample
from torchmeander.link import DEFAULT_FREQUENCY
from torchmeander.link import ResonantCoil
from torchmeander.link import evaluate_link
from torchmeander.magnetics import ac_resistance
from torchmeander.fieldmaps import confinement_ratio
from torchmeander.fieldmaps import decay_profile
from torchmeander.fieldmaps import fit_decay_rate
from torchmeander.fieldmaps import surface_field

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ('bend_radius', 'pitch', 'wire_radius', 'separation')
OBJECTIVES = ('eta_max', 'surface_field_per_ohm')
ALMOST_SAME = 0.2
MILLIWATT_CLASS = 1e-3
WATT_CLASS = 1.
BEND_RADIUS_NOTE = ('bend radii 0.4, 0.2 and 0.1 m are anthropometric stand-ins '
                    'for torso, thigh and arm curvature')

def json_float(value):
    # inf (flat coil) is written as null
    return None if value is None or math.isinf(value) else float(value)

@dataclass(frozen=True)
class CoilConfig:
    geometry: object
    conductor: object
    deform: DeformSpec = None

    def path(self):
        return deform_path(build_path(self.geometry), self.deform)

@dataclass(frozen=True)
class LinkScenario:
    tx: CoilConfig
    rx: CoilConfig
    frequency: float = DEFAULT_FREQUENCY
    input_power: float = 1.
    separation: float = 0.02
    retune: bool = False
    bend_rx: bool = True
    axis_direction: tuple = (0., 1.)
    max_segment_length: float = 5e-3

    def with_conductor(self, conductor):
        return replace(self, tx=replace(self.tx, conductor=conductor),
                       rx=replace(self.rx, conductor=conductor))

    def with_geometry(self, **changes):
        for coil in (self.tx, self.rx):
            if not isinstance(coil.geometry, MeanderSpec):
                raise ParameterDomainError(
                    f'{", ".join(changes)} can only be varied on meander coils')
        return replace(
            self,
            tx=replace(self.tx, geometry=replace(self.tx.geometry, **changes)),
            rx=replace(self.rx, geometry=replace(self.rx.geometry, **changes)),
        )

def discretize(geometry, max_segment_length):
    return resample(build_path(geometry), max_segment_length)

def build_link(scenario, bend_radius=math.inf):
    '''
    Centerlines of the transmitting and receiving coils.

    The receiver faces the transmitter at `separation` along +z. When bent,
    the transmitter wraps a cylinder of radius bend_radius and the receiver
    (if bend_rx) the concentric cylinder of radius bend_radius + separation.
    '''
    msl = scenario.max_segment_length
    tx = discretize(scenario.tx.geometry, msl)
    rx = discretize(scenario.rx.geometry, msl)
    lift = (0., 0., scenario.separation)
    if math.isinf(bend_radius):
        return tx, rx.translated(lift)
    center = (tx.vertices.max(dim=0).values + tx.vertices.min(dim=0).values) / 2
    bent_tx = bend_around_cylinder(tx, bend_radius, scenario.axis_direction,
                                   center, msl)
    if scenario.bend_rx:
        rx = bend_around_cylinder(rx, bend_radius + scenario.separation,
                                  scenario.axis_direction, center, msl)
    return bent_tx, rx.translated(lift)

def tuned_link(scenario):
    tx, rx = build_link(scenario)
    return (ResonantCoil.tuned(tx, scenario.tx.conductor, scenario.frequency),
            ResonantCoil.tuned(rx, scenario.rx.conductor, scenario.frequency))

def evaluate_scenario(scenario, input_power=None):
    coil_tx, coil_rx = tuned_link(scenario)
    return evaluate_link(
        coil_tx, coil_rx,
        scenario.input_power if input_power is None else input_power)

'''
Sweeps
'''

@dataclass(frozen=True)
class SweepSpec:
    base_scenario: LinkScenario
    parameter: str
    values: tuple
    retune: bool = False

    def validate(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ParameterDomainError(
                f'unknown sweep parameter {self.parameter}')
        if not len(self.values):
            raise ParameterDomainError('sweep values must not be empty')
        for value in self.values:
            if self.parameter == 'bend_radius':
                valid = value > 0
            else:
                valid = math.isfinite(value) and value > 0
            if not valid:
                raise ParameterDomainError(
                    f'{self.parameter} value {value} is out of range')
        return self

@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    L1: float
    L2: float
    R1: float
    R2: float
    M: float
    k: float
    Q1: float
    Q2: float
    U: float
    eta_max: float
    delivered_power: float

    @classmethod
    def from_result(cls, parameter, value, result):
        return cls(parameter, value, result.L1, result.L2, result.R1,
                   result.R2, result.M, result.k, result.Q1, result.Q2,
                   result.U, result.eta_max, result.delivered_power)

    def as_dict(self):
        d = asdict(self)
        d['value'] = json_float(self.value)
        return d

def _map(function, items, workers):
    if workers is None or workers <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))

def parameter_sweep(spec, workers=1):
    spec.validate()
    base = spec.base_scenario
    values = list(spec.values)
    if spec.parameter == 'bend_radius':
        # flat first
        values = sorted(values, key=lambda v: -v)
        flat_tx, flat_rx = tuned_link(base)

    def point(value):
        if spec.parameter == 'bend_radius':
            try:
                tx, rx = build_link(base, value)
            except GeometryError as e:
                raise GeometryError(f'bend_radius {value}: {e}') from e
            result = evaluate_link(flat_tx.deformed(tx, spec.retune),
                                   flat_rx.deformed(rx, spec.retune),
                                   base.input_power)
        elif spec.parameter == 'separation':
            result = evaluate_scenario(replace(base, separation=value))
        else:
            result = evaluate_scenario(
                base.with_geometry(**{spec.parameter: value}))
        logger.info('sweep %s=%s: eta_max=%.6g',
                    spec.parameter, value, result.eta_max)
        return SweepRow.from_result(spec.parameter, value, result)

    return _map(point, values, workers)

def deformation_sweep(spec, workers=1):
    if spec.parameter != 'bend_radius':
        raise ParameterDomainError(
            'a deformation sweep varies bend_radius, '
            f'got {spec.parameter}')
    return parameter_sweep(spec, workers)

def deformation_gate(rows, threshold=ALMOST_SAME):
    flat = [row for row in rows if math.isinf(row.value)]
    if not flat:
        raise AnalysisError('the deformation gate needs a flat (inf) row')
    reference = flat[0].eta_max
    deviation = max(abs(row.eta_max - reference) / reference for row in rows)
    return {
        'max_relative_deviation': deviation,
        'threshold': threshold,
        'passed': deviation < threshold,
    }

def power_gate(result, input_power, minimum):
    delivered = result.eta_max * input_power
    return {
        'input_power': input_power,
        'delivered_power': delivered,
        'minimum': minimum,
        'passed': delivered >= minimum,
    }

'''
Comparisons
'''

def material_compare(scenario, conductors, input_power=None, workers=1):
    if len(conductors) < 2:
        raise ParameterDomainError('material_compare needs at least 2 conductors')
    def point(conductor):
        result = evaluate_scenario(scenario.with_conductor(conductor),
                                   input_power)
        logger.info('material %s: eta_max=%.6g', conductor.name, result.eta_max)
        return conductor.name, result
    return _map(point, list(conductors), workers)

@dataclass(frozen=True, eq=False)
class ConfinementComparison:
    meander_profile: object
    helix_profile: object
    meander_rate: float
    helix_rate: float
    meander_ratio: float
    helix_ratio: float
    ratio_of_ratios: float
    shallow: float
    deep: float

    def as_dict(self):
        def profile(p):
            return {
                'start': p.start.tolist(),
                'direction': p.direction.tolist(),
                'depths': p.depths.tolist(),
                'magnitudes': p.magnitudes.tolist(),
            }
        return {
            'meander': {'profile': profile(self.meander_profile),
                        'rate': self.meander_rate,
                        'confinement_ratio': self.meander_ratio},
            'helix': {'profile': profile(self.helix_profile),
                      'rate': self.helix_rate,
                      'confinement_ratio': self.helix_ratio},
            'shallow': self.shallow,
            'deep': self.deep,
            'ratio_of_ratios': self.ratio_of_ratios,
        }

def confinement_compare(meander, helix, depths, current=1., shallow=0.01,
                        deep=0.1, window=None, workers=1):
    d_meander = footprint_diameter(meander)
    d_helix = footprint_diameter(helix)
    if abs(d_meander - d_helix) > 0.1 * max(d_meander, d_helix):
        raise ParameterDomainError(
            f'footprint diameters differ by more than 10% '
            f'({d_meander} m, {d_helix} m)'
        )
    depths = sorted(depths)
    meander_path = build_meander(meander)
    helix_path = build_helix(helix)
    meander_profile = decay_profile(meander_path, current, depths,
                                    workers=workers)
    helix_profile = decay_profile(helix_path, current, depths, workers=workers)
    meander_ratio = confinement_ratio(meander_profile, shallow, deep)
    helix_ratio = confinement_ratio(helix_profile, shallow, deep)
    return ConfinementComparison(
        meander_profile, helix_profile,
        fit_decay_rate(meander_profile, window),
        fit_decay_rate(helix_profile, window),
        meander_ratio, helix_ratio, helix_ratio / meander_ratio,
        shallow, deep,
    )

'''
Trace optimization
'''

@dataclass(frozen=True, eq=False)
class OptimizationResult:
    best: MeanderSpec
    objective: str
    value: float
    log: list

    def as_dict(self):
        return {
            'objective': self.objective,
            'value': self.value,
            'best': asdict(self.best),
            'evaluations': len(self.log),
            'feasible_evaluations': sum(e['feasible'] for e in self.log),
        }

def trace_objective(scenario, objective):
    if objective not in OBJECTIVES:
        raise ParameterDomainError(f'unknown objective {objective}')
    def evaluate(pitch, wire_radius):
        candidate = scenario.with_geometry(pitch=pitch, wire_radius=wire_radius)
        candidate.tx.geometry.validate()
        candidate.rx.geometry.validate()
        if objective == 'eta_max':
            return evaluate_scenario(candidate).eta_max
        path = discretize(candidate.tx.geometry, candidate.max_segment_length)
        return surface_field(path, 1.)\
            / ac_resistance(path, candidate.tx.conductor, candidate.frequency)
    return evaluate

class TraceSearch(object):
    '''
    Cached evaluation of an objective over (pitch, wire_radius); records every
    evaluation in order. Infeasible points evaluate to -inf and are logged
    with a null objective.
    '''
    def __init__(self, evaluate):
        self.evaluate = evaluate
        self.cache = dict()
        self.log = []

    def _value(self, point):
        try:
            return self.evaluate(*point)
        except ParameterDomainError as e:
            logger.debug('infeasible pitch=%g wire_radius=%g: %s',
                         point[0], point[1], e)
            return None

    def record(self, points, values, stage):
        for point, value in zip(points, values):
            if point in self.cache:
                continue
            self.cache[point] = -math.inf if value is None else value
            self.log.append({'index': len(self.log), 'stage': stage,
                             'pitch': point[0], 'wire_radius': point[1],
                             'objective': value,
                             'feasible': value is not None})

    def many(self, points, stage, workers=1):
        fresh = []
        for point in points:
            if point not in self.cache and point not in fresh:
                fresh.append(point)
        self.record(fresh, _map(self._value, fresh, workers), stage)
        return [self.cache[p] for p in points]

    def __call__(self, pitch, wire_radius, stage):
        return self.many([(float(pitch), float(wire_radius))], stage)[0]

    def best(self):
        feasible = [e for e in self.log if e['feasible']]
        if not feasible:
            return None
        return max(feasible, key=lambda e: (e['objective'], -e['index']))

def golden_section_search(f, a, b, tol, max_iter=40):
    # maximize f on [a, b]
    gr = (1 + math.sqrt(5)) / 2
    c = b - (b - a) / gr
    d = a + (b - a) / gr
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - (b - a) / gr
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) / gr
            fd = f(d)
    return (a + b) / 2

def grid_points(pitch_range, wire_radius_range, n):
    pitches = np.linspace(pitch_range[0], pitch_range[1], n).tolist()
    radii = np.linspace(wire_radius_range[0], wire_radius_range[1], n).tolist()
    return [(p, a) for p in pitches for a in radii]

def _check_range(name, value_range):
    lo, hi = value_range
    if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo <= hi):
        raise ParameterDomainError(f'{name} range must satisfy 0 < min <= max')

def optimize_trace(scenario, pitch_range, wire_radius_range,
                   objective='eta_max', grid=8, rounds=3, workers=1,
                   tolerance=1e-3):
    '''
    Coarse grid over (pitch, wire_radius) followed by coordinate descent with
    a golden-section line search per axis. A candidate replaces the current
    best only when it improves the objective.
    '''
    if not isinstance(scenario.tx.geometry, MeanderSpec)\
       or not isinstance(scenario.rx.geometry, MeanderSpec):
        raise ConfigurationError('trace optimization needs meander coils')
    _check_range('pitch', pitch_range)
    _check_range('wire_radius', wire_radius_range)
    search = TraceSearch(trace_objective(scenario, objective))
    search.many(grid_points(pitch_range, wire_radius_range, grid), 'grid',
                workers)
    if search.best() is None:
        raise ConfigurationError(
            'no feasible (pitch, wire_radius) point in the search ranges')
    logger.info('coarse grid best: %s', search.best())

    footprint_y = scenario.tx.geometry.footprint_y
    for r in range(rounds):
        start = search.best()['objective']
        for axis in ('pitch', 'wire_radius'):
            best = search.best()
            if axis == 'pitch':
                lo = max(pitch_range[0], 2 * best['wire_radius'] * (1 + 1e-9))
                hi = min(pitch_range[1], footprint_y / 2)
                f = lambda v: search(v, best['wire_radius'], f'round{r}')
            else:
                lo = wire_radius_range[0]
                hi = min(wire_radius_range[1], best['pitch'] / 2 * (1 - 1e-9))
                f = lambda v: search(best['pitch'], v, f'round{r}')
            if hi <= lo:
                continue
            x = golden_section_search(f, lo, hi, tolerance * (hi - lo))
            f(x)
        if search.best()['objective'] <= start:
            break
    best = search.best()
    spec = replace(scenario.tx.geometry, pitch=best['pitch'],
                   wire_radius=best['wire_radius'])
    logger.info('optimized %s=%.6g at pitch=%g wire_radius=%g', objective,
                best['objective'], best['pitch'], best['wire_radius'])
    return OptimizationResult(spec, objective, best['objective'], search.log)

def exhaustive_grid_best(scenario, pitch_range, wire_radius_range,
                         objective='eta_max', n=64, workers=1):
    search = TraceSearch(trace_objective(scenario, objective))
    search.many(grid_points(pitch_range, wire_radius_range, n), 'grid', workers)
    if search.best() is None:
        raise ConfigurationError(
            'no feasible (pitch, wire_radius) point in the search ranges')
    return search.best()

'''
Tables
'''

def sweep_rows_to_csv(rows, f):
    writer = csv.writer(f, lineterminator='\n')
    names = [field.name for field in fields(SweepRow)]
    writer.writerow(names)
    for row in rows:
        d = row.as_dict()
        writer.writerow(['' if d[n] is None else repr(d[n])
                         if isinstance(d[n], float) else d[n] for n in names])

def results_to_csv(named_results, f):
    writer = csv.writer(f, lineterminator='\n')
    names = [field.name for field in fields(named_results[0][1])]
    writer.writerow(['conductor'] + names)
    for name, result in named_results:
        d = result.as_dict()
        writer.writerow([name] + [repr(d[n]) for n in names])

def optimization_log_to_csv(log, f):
    writer = csv.writer(f, lineterminator='\n')
    names = ('index', 'stage', 'pitch', 'wire_radius', 'objective', 'feasible')
    writer.writerow(names)
    for entry in log:
        writer.writerow([repr(entry[n]) if isinstance(entry[n], float)
                         else entry[n] for n in names])

def input_hash(data):
    # git blob hash of the input bytes
    return hashlib.sha1(b'blob %d\0' % len(data) + data).hexdigest()
