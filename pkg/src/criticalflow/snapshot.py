"""Field snapshot files: CSV dumps of physical samples.

Format: first line is the header `dim,n,length,components,time`, second line
the corresponding values, then one line per grid point (row-major) holding
the component values at that point.
"""

import numpy as np

from .fields import make_grid, transform

HEADER = "dim,n,length,components,time"


def save_field(field, path, time=0.0):
    grid = field.grid
    phys = field.to_physical()
    flat = phys.reshape(field.components, -1).T  # (points, components)
    with open(path, "w") as fh:
        fh.write(HEADER + "\n")
        fh.write(f"{grid.dim},{grid.n},{grid.length!r},{field.components},{time!r}\n")
        np.savetxt(fh, flat, delimiter=",", fmt="%.17g")


def load_field(path):
    """Read a snapshot file; returns (SpectralField, time)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        dim_s, n_s, length_s, comp_s, time_s = fh.readline().strip().split(",")
        dim, n, comp = int(dim_s), int(n_s), int(comp_s)
        length, time = float(length_s), float(time_s)
        flat = np.loadtxt(fh, delimiter=",", ndmin=2)
    grid = make_grid(dim, n, length)
    if flat.shape != (grid.size, comp):
        raise ValueError(f"{path}: sample block {flat.shape} does not match header")
    phys = flat.T.reshape((comp,) + grid.shape)
    return transform(grid, phys), time
