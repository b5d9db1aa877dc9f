"""picrom: structure-preserving reduced-order models for 1D-1V Vlasov-Poisson.

A Hamiltonian particle-in-cell full-order solver, Proper Symplectic
Decomposition (PSD) linear reduction, and a jointly trained autoencoder +
Hamiltonian neural network (AE-HNN) nonlinear reduction, with diagnostics
for the Landau-damping and two-stream benchmarks.
"""

__version__ = "1.0.0"

from .pic import GridSpec, ParticleState, PhysicalConstants
from .psd import SnapshotSet, SymplecticBasis, build_basis_from_snapshots
from .quiet_start import ScenarioSpec
from .rom import RomPipeline, predict_trajectory
from .simulate import SimulationResult, run_simulation

__all__ = [
    "GridSpec",
    "ParticleState",
    "PhysicalConstants",
    "ScenarioSpec",
    "SimulationResult",
    "SnapshotSet",
    "SymplecticBasis",
    "RomPipeline",
    "build_basis_from_snapshots",
    "predict_trajectory",
    "run_simulation",
    "__version__",
]
