"""Regenerate the synthetic fixture files in this directory.

    python fixtures/generate.py

All files are drawn from fixed seeds, so rerunning reproduces them exactly.
"""
from pathlib import Path

import numpy as np

from manifold_means import datasets, sphere, synthetic

HERE = Path(__file__).resolve().parent

POLE = datasets.latlon_to_xyz(78.5, 89.4)
AXIS = sphere.normalize(np.array([0.3, -0.2, 0.9]))
HEXAGON = np.exp(2j * np.pi * np.arange(8) / 8) * (1 + 0.2 * np.arange(8) / 8)


def main():
    rng = np.random.default_rng(20240101)
    X = synthetic.sphere_tangent_gaussian(rng, POLE, 50, (0.12, 0.07))
    datasets.write_directions(HERE / "directions_latlon.csv", X, "latlon_deg")
    datasets.write_directions(HERE / "directions_xyz.csv", X[:30], "xyz")
    datasets.write_axes(HERE / "axes.csv", synthetic.axial_sample(rng, AXIS, 60, (0.15, 0.07)))
    datasets.write_planar_landmarks(
        HERE / "planar_k8.csv", synthetic.planar_configurations(rng, HEXAGON, 40, 0.03)
    )
    before, after = synthetic.exchangeable_tetrad_pairs(rng, 12)
    datasets.write_tetrads(HERE / "tetrads_before.csv", before)
    datasets.write_tetrads(HERE / "tetrads_after.csv", after)


if __name__ == "__main__":
    main()
