import io
import math
import time

import numpy as np
import pytest
import torch
from scipy.spatial.transform import Rotation

from torchmeander.analytic import alternating_array_field
from torchmeander.analytic import loop_axis_field
from torchmeander.errors import AnalysisError
from torchmeander.errors import ParameterDomainError
from torchmeander.errors import ProximityError
from torchmeander.geometry import DTYPE
from torchmeander.geometry import LoopSpec
from torchmeander.geometry import MeanderSpec
from torchmeander.geometry import WirePath
from torchmeander.geometry import build_loop
from torchmeander.geometry import build_meander
from torchmeander.geometry import resample
from torchmeander.fieldmaps import DecayProfile
from torchmeander.fieldmaps import GridSpec
from torchmeander.fieldmaps import centered_grid
from torchmeander.fieldmaps import confinement_ratio
from torchmeander.fieldmaps import decay_profile
from torchmeander.fieldmaps import fit_decay_rate
from torchmeander.fieldmaps import sample_plane
from torchmeander.fieldmaps import surface_field
from torchmeander.fieldmaps import write_grid_csv
from torchmeander.fieldmaps import write_profile_csv

def loop():
    return build_loop(LoopSpec(0.1, (0., 0., 0.), (0., 0., 1.), 512, 1e-3))

def synthetic(depths, magnitudes):
    depths = torch.as_tensor(depths, dtype=DTYPE)
    return DecayProfile(torch.zeros(3, dtype=DTYPE),
                        torch.tensor([0., 0., 1.], dtype=DTYPE),
                        depths, torch.as_tensor(magnitudes, dtype=DTYPE))

def test_zero_current_grid():
    grid = centered_grid(loop(), 5, 5, 0.02, height=0.01)
    result = sample_plane(loop(), 0., grid)
    assert torch.equal(result.magnitudes, torch.zeros(25, dtype=DTYPE))

def test_loop_plane_symmetry():
    grid = GridSpec((-0.15, -0.15, 0.), (1., 0., 0.), (0., 1., 0.),
                    11, 11, 0.03)
    result = sample_plane(loop(), 1., grid)
    m = result.magnitude_map()
    assert m.shape == (11, 11)
    sample = result.samples()[11 * 5 + 5]
    assert torch.equal(sample.position, result.points[60])
    assert float(torch.linalg.norm(sample.B)) == pytest.approx(float(m[5, 5]),
                                                            rel=1e-12)
    assert torch.allclose(m, torch.rot90(m), rtol=1e-9, atol=0.)

def test_grid_point_on_wire():
    path = build_meander(MeanderSpec(0.3, 0.2, 0.05, wire_radius=5e-4))
    grid = GridSpec((0.1, -0.01, 0.), (1., 0., 0.), (0., 1., 0.), 3, 3, 0.01)
    with pytest.raises(ProximityError) as e:
        sample_plane(path, 1., grid)
    assert e.value.point_index == [0, 1]
    assert e.value.segment_index == 0

def test_grid_rejects_skewed_axes():
    grid = GridSpec((0., 0., 0.), (1., 0., 0.), (1., 1., 0.), 3, 3, 0.01)
    with pytest.raises(ParameterDomainError):
        sample_plane(loop(), 1., grid)

def test_centered_grid_is_centered():
    grid = centered_grid(loop(), 5, 7, 0.01, height=0.02)
    points = grid.points()
    center = points.mean(dim=0)
    assert torch.allclose(center, torch.tensor([0., 0., 0.02], dtype=DTYPE),
                          rtol=0., atol=1e-12)

def test_loop_axis_profile():
    depths = [0.05, 0.1, 0.2]
    profile = decay_profile(loop(), 1., depths)
    expected = [loop_axis_field(0.1, 1., z) for z in depths]
    assert np.allclose(profile.magnitudes.numpy(), expected, rtol=5e-3, atol=0.)

def test_profile_rejects_shallow_depths():
    with pytest.raises(ParameterDomainError):
        decay_profile(loop(), 1., [5e-4, 0.01])
    with pytest.raises(ParameterDomainError):
        decay_profile(loop(), 1., [0.01, 0.01])

def test_fit_exponential():
    depths = np.linspace(0.01, 0.2, 20)
    profile = synthetic(depths, 3e-6 * np.exp(-50 * depths))
    assert fit_decay_rate(profile) == pytest.approx(50., abs=1e-6)

def test_fit_constant():
    profile = synthetic(np.linspace(0.01, 0.2, 20), np.full(20, 2e-6))
    assert abs(fit_decay_rate(profile)) < 1e-12

def test_fit_window():
    depths = np.linspace(0.01, 0.2, 20)
    magnitudes = np.where(depths < 0.1, np.exp(-50 * depths),
                          np.exp(-5) * np.exp(-10 * (depths - 0.1)))
    profile = synthetic(depths, magnitudes)
    assert fit_decay_rate(profile, (0.01, 0.09)) == pytest.approx(50., abs=1e-6)

def test_fit_needs_samples():
    profile = synthetic([0.01, 0.02, 0.03], [3., 2., 1.])
    with pytest.raises(AnalysisError):
        fit_decay_rate(profile)

def test_confinement_ratio():
    profile = decay_profile(loop(), 1., np.arange(1, 21) * 0.01)
    assert confinement_ratio(profile, 0.05, 0.05) == 1.
    expected = (0.01 + 0.0001) ** 1.5 / (0.01 + 0.01) ** 1.5
    assert confinement_ratio(profile, 0.01, 0.1) == pytest.approx(expected,
                                                                  rel=1e-2)
    assert expected == pytest.approx(0.356, abs=5e-3)

def test_confinement_ratio_needs_sampled_depth():
    profile = decay_profile(loop(), 1., [0.01, 0.02, 0.1])
    with pytest.raises(AnalysisError):
        confinement_ratio(profile, 0.015, 0.1)

def test_long_meander_matches_line_array():
    # runs long enough to act as infinite lines over the profile
    pitch = 0.05
    path = build_meander(MeanderSpec(4., 0.2, pitch, wire_radius=5e-4))
    depths = np.linspace(0.01, 0.1, 10)
    profile = decay_profile(path, 1., depths)
    expected = alternating_array_field(1., pitch, 5, depths)
    assert np.allclose(profile.magnitudes.numpy(), expected, rtol=2e-2, atol=0.)

def test_reference_meander_decays_beyond_one_pitch():
    path = build_meander(MeanderSpec())
    profile = decay_profile(path, 1., np.linspace(0.05, 0.3, 26))
    m = profile.magnitudes
    assert torch.all(m[1:] < m[:-1])

def test_wide_meander_decays_at_pitch_rate():
    pitch = 0.05
    path = build_meander(MeanderSpec(2., 2., pitch))
    profile = decay_profile(path, 1., np.linspace(0.025, 0.1, 16))
    assert fit_decay_rate(profile, (0.025, 0.1))\
        == pytest.approx(math.pi / pitch, rel=0.15)

def test_decay_rate_rigid_invariance():
    path = build_meander(MeanderSpec())
    depths = np.linspace(0.01, 0.2, 20)
    rate = fit_decay_rate(decay_profile(path, 1., depths))
    rotation = torch.as_tensor(
        Rotation.from_rotvec([0.3, -0.5, 0.4]).as_matrix(), dtype=DTYPE)
    offset = torch.tensor([0.7, -0.2, 1.1], dtype=DTYPE)
    moved = WirePath(path.vertices @ rotation.T + offset,
                     path.wire_radius, path.closed)
    moved_rate = fit_decay_rate(decay_profile(moved, 1., depths))
    assert moved_rate == pytest.approx(rate, rel=1e-9)

def dense_meander():
    # about 2000 segments
    path = resample(build_meander(MeanderSpec(corner_samples=8)), 9e-4)
    assert 1800 <= path.n_segments <= 2200
    return path

def grid_csv(path, n, workers):
    f = io.StringIO()
    write_grid_csv(sample_plane(path, 1., centered_grid(path, n, n, 0.004,
                                                        height=0.01),
                                workers=workers), f)
    return f.getvalue()

def test_grid_csv_independent_of_workers(single_thread):
    path = dense_meander()
    assert grid_csv(path, 30, 1) == grid_csv(path, 30, 8)

@pytest.mark.slow
def test_large_grid(single_thread):
    path = dense_meander()
    single = grid_csv(path, 100, 1)
    t0 = time.perf_counter()
    parallel = grid_csv(path, 100, 8)
    assert time.perf_counter() - t0 < 5.
    assert single == parallel

def test_surface_field_decreases_with_standoff():
    path = build_meander(MeanderSpec())
    assert surface_field(path, 1., 0.005) > surface_field(path, 1., 0.02)

def test_csv_headers():
    grid = centered_grid(loop(), 2, 2, 0.01, height=0.01)
    f = io.StringIO()
    write_grid_csv(sample_plane(loop(), 1., grid), f)
    lines = f.getvalue().splitlines()
    assert lines[0] == 'u,v,x,y,z,Bx,By,Bz,Bmag'
    assert len(lines) == 5
    f = io.StringIO()
    write_profile_csv(decay_profile(loop(), 1., [0.01, 0.02]), f)
    assert f.getvalue().splitlines()[0] == 'depth_m,Bmag_T'
