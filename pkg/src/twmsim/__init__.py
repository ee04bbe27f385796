"""Propagator-based simulation of pulsed three-wave mixing (PDC and QFC) in imperfect chi(2) waveguides."""

from .analysis import (
    figures_of_merit,
    jsa_decompose,
    moment_M,
    photon_moments,
    purity,
    qfc_decompose,
    schmidt_number,
    separability,
    transform_nonvacuum_input,
)
from .config import build_from_config, load_config
from .dispersion import build_grid, centered_grid, load_dispersion, read_dispersion_csv, walk_off
from .errors import TwmError
from .nonlinearity import (
    DomainErrorModel,
    InteractionCoefficients,
    apodized_poling,
    generate_inhomogeneity,
    inject_domain_errors,
    periodic_poling,
    uniform_pattern,
)
from .process import ProcessKind
from .propagator import Propagator, inverse_propagator, ode_reference, trotter_propagate
from .pump import PumpPulse, pump_spectral_amplitude, spm_overlap_fom
from .scenario import LossModel, Scenario, build_mesh, build_scenario

__version__ = "0.1.0"
