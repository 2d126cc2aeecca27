"""Coloured stochastic vertex models in a quadrant, exactly and numerically.

The package has three layers:

* exact kernels over rationals (`qkit`, `weights`, `compositions`, `shl`),
* integral formulas evaluated by residue sums and contour quadrature
  (`integrals`),
* stochastic simulation of the lattice models and their polymer limits
  (`simulate`, `polymers`).

Every closed formula ships with an independent oracle (brute-force
enumeration, lattice partition functions, Monte Carlo); `cli` wires the
verification suites together.
"""

from vertexlab.weights import FusedConfig, ModelParams

__all__ = ["FusedConfig", "ModelParams"]

__version__ = "0.1.0"
