import os
import sys
import json
import subprocess

import pytest

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..')
SCRIPT = os.path.join(ROOT, 'scripts', 'meander-wpt.py')
SCENES = os.path.join(ROOT, 'scenes')

def run(*args):
    return subprocess.run([sys.executable, SCRIPT] + [str(a) for a in args],
                          capture_output=True, text=True)

def error_of(process):
    return json.loads(process.stderr.strip().splitlines()[-1])

def test_link_is_reproducible(tmp_path):
    scene = os.path.join(SCENES, 'reference_link.json')
    outputs = []
    for name in ('a.json', 'b.json'):
        out = tmp_path / name
        process = run('link', '--scene', scene, '--out', out, '--threads', 2)
        assert process.returncode == 0, process.stderr
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    result = json.loads(outputs[0])
    assert result['scenario']['tx'] == 'tx'
    assert 0 < result['result']['eta_max'] < 1
    meta = json.loads((tmp_path / 'a.json.meta.json').read_text())
    assert meta['command'] == 'link'
    assert len(meta['input_hash']) == 40
    assert meta['materials']['liquid_metal']['resistivity'] == 2.89e-7

def test_missing_coils(tmp_path):
    scene = tmp_path / 'scene.json'
    scene.write_text(json.dumps({'version': 1}))
    process = run('geom', '--scene', scene, '--out', tmp_path / 'out.csv')
    assert process.returncode == 1
    error = error_of(process)
    assert error['error'] == 'SceneError'
    assert error['path'] == 'coils'

def test_grid_point_on_wire(tmp_path):
    process = run('field', '--scene', os.path.join(SCENES, 'wire_crossing.json'),
                  '--out', tmp_path / 'field.csv')
    assert process.returncode == 2
    error = error_of(process)
    assert error['error'] == 'ProximityError'
    assert error['point_index'] == [0, 1]
    assert error['segment_index'] == 0

def test_missing_scene_file(tmp_path):
    process = run('link', '--scene', tmp_path / 'absent.json',
                  '--out', tmp_path / 'out.json')
    assert process.returncode == 3
    assert error_of(process)['path'].endswith('absent.json')

def test_malformed_json(tmp_path):
    scene = tmp_path / 'scene.json'
    scene.write_text('{"version": 1,')
    process = run('link', '--scene', scene, '--out', tmp_path / 'out.json')
    assert process.returncode == 3

def test_bad_threads(tmp_path):
    process = run('geom', '--scene', os.path.join(SCENES, 'loop_field.json'),
                  '--out', tmp_path / 'out.csv', '--threads', 'many')
    assert process.returncode == 1
    assert error_of(process)['error'] == 'UsageError'

def test_geom(tmp_path):
    out = tmp_path / 'path.csv'
    process = run('geom', '--scene', os.path.join(SCENES, 'reference_link.json'),
                  '--out', out, '--coil', 'rx', '--bend-radius', 0.2,
                  '--max-segment-length', 0.01)
    assert process.returncode == 0, process.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == 'x,y,z'
    meta = json.loads((tmp_path / 'path.csv.meta.json').read_text())
    assert meta['summary']['coil'] == 'rx'
    assert meta['summary']['segments'] == len(lines) - 2

def test_coil_deform_applies_to_geom_and_profile(tmp_path):
    with open(os.path.join(SCENES, 'loop_field.json')) as fp:
        document = json.load(fp)
    document['coils']['loop']['deform'] = {'bend_radius': 0.3,
                                           'max_segment_length': 0.005}
    scene = tmp_path / 'scene.json'
    scene.write_text(json.dumps(document))
    out = tmp_path / 'path.csv'
    process = run('geom', '--scene', scene, '--out', out)
    assert process.returncode == 0, process.stderr
    z = [float(line.split(',')[2]) for line in out.read_text().splitlines()[1:]]
    assert max(abs(v) for v in z) > 0.01
    meta = json.loads((tmp_path / 'path.csv.meta.json').read_text())
    assert meta['summary']['bend_radius'] == 0.3
    bent, flat = tmp_path / 'bent.csv', tmp_path / 'flat.csv'
    assert run('profile', '--scene', scene, '--out', bent).returncode == 0
    assert run('profile', '--scene', os.path.join(SCENES, 'loop_field.json'),
               '--out', flat).returncode == 0
    assert bent.read_text() != flat.read_text()

def test_field_and_profile(tmp_path):
    scene = os.path.join(SCENES, 'loop_field.json')
    out = tmp_path / 'field.csv'
    process = run('field', '--scene', scene, '--out', out, '--grid', '4x3',
                  '--current', 2)
    assert process.returncode == 0, process.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == 'u,v,x,y,z,Bx,By,Bz,Bmag'
    assert len(lines) == 13
    out = tmp_path / 'profile.csv'
    process = run('profile', '--scene', scene, '--out', out)
    assert process.returncode == 0, process.stderr
    assert out.read_text().splitlines()[0] == 'depth_m,Bmag_T'

def test_compare_confinement(tmp_path):
    out = tmp_path / 'compare.json'
    process = run('compare', '--scene', os.path.join(SCENES, 'confinement.json'),
                  '--out', out)
    assert process.returncode == 0, process.stderr
    result = json.loads(out.read_text())
    confinement = result['confinement']
    assert confinement['meander']['rate'] > confinement['helix']['rate']

def test_missing_section(tmp_path):
    process = run('sweep', '--scene', os.path.join(SCENES, 'loop_field.json'),
                  '--out', tmp_path / 'sweep.csv')
    assert process.returncode == 1
    assert error_of(process)['path'] == 'sweep'

def test_sweep_records_notes(tmp_path):
    with open(os.path.join(SCENES, 'reference_link.json')) as fp:
        document = json.load(fp)
    document['link']['max_segment_length'] = 0.02
    document['sweep']['values'] = [None, 0.2]
    scene = tmp_path / 'scene.json'
    scene.write_text(json.dumps(document))
    out = tmp_path / 'sweep.csv'
    process = run('sweep', '--scene', scene, '--out', out)
    assert process.returncode == 0, process.stderr
    summary = json.loads((tmp_path / 'sweep.csv.summary.json').read_text())
    meta = json.loads((tmp_path / 'sweep.csv.meta.json').read_text())
    assert 'anthropometric' in summary['notes']['bend_radius']
    assert meta['notes']['bend_radius'] == summary['notes']['bend_radius']
    assert 'materials' in meta['notes']
    assert [row['value'] for row in summary['rows']] == [None, 0.2]

@pytest.mark.slow
def test_reference_sweep(tmp_path):
    out = tmp_path / 'sweep.csv'
    process = run('sweep', '--scene', os.path.join(SCENES, 'reference_link.json'),
                  '--out', out, '--threads', 'auto')
    assert process.returncode == 0, process.stderr
    summary = json.loads((tmp_path / 'sweep.csv.summary.json').read_text())
    assert summary['gates']['almost_same']['passed']
    assert len(summary['rows']) == 4
