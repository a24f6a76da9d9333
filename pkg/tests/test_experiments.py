import io
import math
from dataclasses import replace

import pytest

from torchmeander.errors import AnalysisError
from torchmeander.errors import ConfigurationError
from torchmeander.errors import ParameterDomainError
from torchmeander.geometry import HelixSpec
from torchmeander.geometry import LoopSpec
from torchmeander.geometry import MeanderSpec
from torchmeander.magnetics import ac_resistance
from torchmeander.magnetics import load_materials
from torchmeander.fieldmaps import surface_field
from torchmeander.experiments import ALMOST_SAME
from torchmeander.experiments import CoilConfig
from torchmeander.experiments import LinkScenario
from torchmeander.experiments import SweepSpec
from torchmeander.experiments import confinement_compare
from torchmeander.experiments import deformation_gate
from torchmeander.experiments import deformation_sweep
from torchmeander.experiments import discretize
from torchmeander.experiments import evaluate_scenario
from torchmeander.experiments import exhaustive_grid_best
from torchmeander.experiments import golden_section_search
from torchmeander.experiments import input_hash
from torchmeander.experiments import material_compare
from torchmeander.experiments import optimization_log_to_csv
from torchmeander.experiments import optimize_trace
from torchmeander.experiments import parameter_sweep
from torchmeander.experiments import power_gate
from torchmeander.experiments import sweep_rows_to_csv

MATERIALS = load_materials()
REFERENCE = MeanderSpec(footprint_x=0.15, footprint_y=0.2, pitch=0.05,
                        wire_radius=1.5e-3, corner_samples=16)

def reference_link(conductor='liquid_metal', **changes):
    coil = CoilConfig(REFERENCE, MATERIALS[conductor])
    scenario = LinkScenario(coil, coil, input_power=2., separation=0.02,
                            axis_direction=(0., 1.), max_segment_length=5e-3)
    return replace(scenario, **changes)

@pytest.fixture(scope='module')
def bend_rows():
    spec = SweepSpec(reference_link(), 'bend_radius',
                     (math.inf, 0.4, 0.2, 0.1), retune=False)
    return deformation_sweep(spec)

'''
Sweeps
'''

def test_flat_row_matches_scenario():
    scenario = reference_link(max_segment_length=1e-2)
    rows = deformation_sweep(SweepSpec(scenario, 'bend_radius', (math.inf,)))
    flat = evaluate_scenario(scenario)
    assert len(rows) == 1
    assert rows[0].eta_max == pytest.approx(flat.eta_max, rel=1e-9)
    assert rows[0].M == pytest.approx(flat.M, rel=1e-9)

def test_bending_keeps_efficiency(bend_rows):
    assert [row.value for row in bend_rows] == [math.inf, 0.4, 0.2, 0.1]
    gate = deformation_gate(bend_rows)
    assert gate['max_relative_deviation'] < ALMOST_SAME
    assert gate['passed']

def test_fixed_capacitor_penalizes_bending(bend_rows):
    spec = SweepSpec(reference_link(), 'bend_radius', (0.1,), retune=True)
    retuned = deformation_sweep(spec)[0]
    fixed = bend_rows[-1]
    assert fixed.value == retuned.value == 0.1
    assert fixed.k == pytest.approx(retuned.k, rel=1e-12)
    assert fixed.Q1 < 0.95 * retuned.Q1
    assert fixed.Q2 < 0.95 * retuned.Q2
    assert fixed.eta_max < retuned.eta_max

def test_yarn_bends_below_liquid_metal(bend_rows):
    spec = SweepSpec(reference_link('yarn'), 'bend_radius',
                     (math.inf, 0.4, 0.2, 0.1))
    for yarn, liquid_metal in zip(deformation_sweep(spec), bend_rows):
        assert yarn.value == liquid_metal.value
        assert yarn.eta_max < liquid_metal.eta_max

def test_deformation_gate_needs_flat_row(bend_rows):
    with pytest.raises(AnalysisError):
        deformation_gate(bend_rows[1:])

def test_sweep_rejects_bad_values():
    with pytest.raises(ParameterDomainError):
        parameter_sweep(SweepSpec(reference_link(), 'pitch', (-0.05,)))
    with pytest.raises(ParameterDomainError):
        parameter_sweep(SweepSpec(reference_link(), 'turns', (3.,)))
    with pytest.raises(ParameterDomainError):
        deformation_sweep(SweepSpec(reference_link(), 'pitch', (0.05,)))

def test_separation_sweep_order():
    scenario = reference_link(max_segment_length=1e-2)
    rows = parameter_sweep(SweepSpec(scenario, 'separation', (0.04, 0.02)),
                           workers=2)
    assert [row.value for row in rows] == [0.04, 0.02]
    assert rows[0].k < rows[1].k

def test_sweep_csv(bend_rows):
    f = io.StringIO()
    sweep_rows_to_csv(bend_rows, f)
    lines = f.getvalue().splitlines()
    assert lines[0].startswith('parameter,value,L1,L2,R1,R2,M,k')
    assert lines[1].startswith('bend_radius,,')
    assert len(lines) == 5

'''
Comparisons
'''

def test_material_ordering_and_power_classes():
    conductors = [MATERIALS[name] for name in ('copper', 'liquid_metal', 'yarn')]
    results = dict(material_compare(reference_link(), conductors, workers=3))
    copper, liquid_metal, yarn = (results[n].eta_max
                                  for n in ('copper', 'liquid_metal', 'yarn'))
    assert copper >= liquid_metal > yarn
    assert power_gate(results['yarn'], 1., 1e-3)['passed']
    assert power_gate(results['liquid_metal'], 2., 1.)['passed']

def test_material_compare_needs_two():
    with pytest.raises(ParameterDomainError):
        material_compare(reference_link(), [MATERIALS['copper']])

@pytest.mark.parametrize('pitch', [0.03, 0.05, 0.08])
def test_meander_confines_better_than_helix(pitch):
    meander = MeanderSpec(0.3, 0.2, pitch, wire_radius=5e-4)
    helix = HelixSpec(radius=0.15, turns=3, pitch_per_turn=0.01)
    depths = [round(0.01 * i, 12) for i in range(1, 21)]
    comparison = confinement_compare(meander, helix, depths)
    assert comparison.meander_rate > comparison.helix_rate
    assert comparison.meander_ratio < comparison.helix_ratio
    assert comparison.as_dict()['ratio_of_ratios'] >= 5

def test_confinement_ignores_depth_order():
    meander = MeanderSpec(0.3, 0.2, 0.05, wire_radius=5e-4)
    helix = HelixSpec(radius=0.15, turns=3, pitch_per_turn=0.01)
    depths = [round(0.01 * i, 12) for i in range(1, 21)]
    forward = confinement_compare(meander, helix, depths)
    backward = confinement_compare(meander, helix, depths[::-1])
    assert forward.as_dict() == backward.as_dict()

def test_confinement_needs_similar_footprints():
    with pytest.raises(ParameterDomainError):
        confinement_compare(MeanderSpec(0.3, 0.2, 0.05),
                            HelixSpec(radius=0.05), [0.01, 0.02, 0.1])

'''
Trace optimization
'''

def test_golden_section_search():
    x = golden_section_search(lambda v: -(v - 0.3) ** 2, 0., 1., 1e-8)
    assert x == pytest.approx(0.3, abs=1e-6)

def test_optimizer_single_point():
    scenario = reference_link(max_segment_length=2e-2)
    result = optimize_trace(scenario, (0.05, 0.05), (1e-3, 1e-3), grid=4)
    assert result.best.pitch == 0.05
    assert result.best.wire_radius == 1e-3
    assert len(result.log) == 1

def test_surface_field_objective():
    scenario = reference_link(max_segment_length=2e-2)
    result = optimize_trace(scenario, (0.05, 0.05), (1e-3, 1e-3),
                            objective='surface_field_per_ohm', grid=2)
    candidate = scenario.with_geometry(pitch=0.05, wire_radius=1e-3)
    path = discretize(candidate.tx.geometry, 2e-2)
    expected = float(surface_field(path, 1.))\
        / float(ac_resistance(path, candidate.tx.conductor, scenario.frequency))
    assert result.objective == 'surface_field_per_ohm'
    assert result.value == pytest.approx(expected, rel=1e-12)

def test_unknown_objective():
    with pytest.raises(ParameterDomainError):
        optimize_trace(reference_link(), (0.02, 0.1), (5e-4, 3e-3),
                       objective='mass')

def test_optimizer_empty_feasible_set():
    scenario = reference_link(max_segment_length=2e-2)
    with pytest.raises(ConfigurationError):
        optimize_trace(scenario, (1e-3, 2e-3), (1e-3, 2e-3), grid=3)

def test_optimizer_needs_meanders():
    loop = CoilConfig(LoopSpec(), MATERIALS['copper'])
    with pytest.raises(ConfigurationError):
        optimize_trace(LinkScenario(loop, loop), (0.02, 0.1), (5e-4, 3e-3))

def test_optimizer_improves_on_grid():
    scenario = reference_link(max_segment_length=2e-2)
    result = optimize_trace(scenario, (0.02, 0.1), (5e-4, 3e-3), grid=4,
                            rounds=2)
    feasible = [e for e in result.log if e['feasible']]
    grid_best = max(e['objective'] for e in feasible if e['stage'] == 'grid')
    assert result.value >= grid_best
    assert result.value == max(e['objective'] for e in feasible)

def test_optimizer_logs_infeasible_points():
    scenario = reference_link(max_segment_length=2e-2)
    result = optimize_trace(scenario, (0.01, 0.05), (1e-3, 6e-3), grid=2,
                            rounds=0)
    infeasible = [e for e in result.log if not e['feasible']]
    assert [(e['pitch'], e['wire_radius']) for e in infeasible]\
        == [(0.01, 6e-3)]
    assert infeasible[0]['objective'] is None
    assert len(result.log) == 4
    assert result.as_dict()['feasible_evaluations'] == 3
    assert result.value == max(e['objective'] for e in result.log
                               if e['feasible'])
    f = io.StringIO()
    optimization_log_to_csv(result.log, f)
    lines = f.getvalue().splitlines()
    assert lines[0] == 'index,stage,pitch,wire_radius,objective,feasible'
    assert lines[2] == '1,grid,0.01,0.006,,False'

@pytest.mark.slow
def test_optimizer_matches_exhaustive_grid():
    scenario = reference_link(max_segment_length=1e-2)
    result = optimize_trace(scenario, (0.02, 0.1), (5e-4, 3e-3), workers=4)
    best = exhaustive_grid_best(scenario, (0.02, 0.1), (5e-4, 3e-3), n=64,
                                workers=4)
    assert result.value >= best['objective'] * (1 - 2e-2)

'''
Provenance
'''

def test_input_hash():
    assert input_hash(b'') == 'e69de29bb2d1d6434b8b29ae775ad8c2e48c5391'
    assert input_hash(b'hello\n') == 'ce013625030ba8dba906f756967f9e9ca394464a'
