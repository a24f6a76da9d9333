'''
Closed-form fields and inductances of simple conductors.

These are independent of the discretized solvers in `magnetics` and serve
as oracles for them.
'''

import numpy as np
from scipy.special import ellipe
from scipy.special import ellipk

from torchmeander.magnetics import MU0

def coaxial_loop_mutual_inductance(r1, r2, gap):
    # Maxwell's formula for coaxial circular filaments
    k2 = 4 * r1 * r2 / ((r1 + r2) ** 2 + gap ** 2)
    k = np.sqrt(k2)
    return MU0 * np.sqrt(r1 * r2)\
        * ((2 / k - k) * ellipk(k2) - 2 / k * ellipe(k2))

def loop_self_inductance(radius, wire_radius):
    return MU0 * radius * (np.log(8 * radius / wire_radius) - 2)

def loop_axis_field(radius, current, z):
    return MU0 * current * radius ** 2 / (2 * (radius ** 2 + z ** 2) ** 1.5)

def dipole_mutual_inductance(radius, gap, radius2=None):
    radius2 = radius if radius2 is None else radius2
    return MU0 * np.pi * radius ** 2 * radius2 ** 2 / (2 * gap ** 3)

def corrected_dipole_mutual_inductance(radius, gap, radius2=None):
    # first correction of the multipole expansion of coaxial loops
    radius2 = radius if radius2 is None else radius2
    return dipole_mutual_inductance(radius, gap, radius2)\
        * (1 - 1.5 * (radius ** 2 + radius2 ** 2) / gap ** 2)

def infinite_wire_field(current, distance):
    return MU0 * current / (2 * np.pi * distance)

def alternating_array_field(current, pitch, n_wires, depth):
    '''
    |B| at `depth` above the center of n_wires infinite straight wires
    spaced by `pitch` and carrying alternating currents.
    '''
    depth = np.asarray(depth, dtype=np.float64)
    y = (np.arange(n_wires) - (n_wires - 1) / 2) * pitch
    sign = np.where(np.arange(n_wires) % 2 == 0, 1., -1.)
    z = depth[..., None]
    rho2 = y ** 2 + z ** 2
    scale = MU0 * current / (2 * np.pi)
    by = np.sum(sign * scale * -z / rho2, axis=-1)
    bz = np.sum(sign * scale * -y / rho2, axis=-1)
    return np.hypot(by, bz)

def infinite_array_field(current, pitch, depth):
    # above one wire of an infinite alternating array
    return MU0 * current / (2 * pitch) / np.sinh(np.pi * depth / pitch)
