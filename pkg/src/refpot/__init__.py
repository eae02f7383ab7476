"""Multi-component Morse reference potential and its direct spectral data.

Bound states, scattering phase shift, Jost-function modulus, the function
g(k) and the Gelfand-Levitan kernel, each with independent cross-checks.
"""
from .potential import (MorseComponent, ReferencePotential, load_config,
                        bundled_config, free_potential, moments)
from .boundstates import BoundState, BoundSpectrum, find_eigenvalues, norming_constants
from .phaseshift import PhaseShiftCurve, build_curve, phase_shift, levinson_residual
from .jost import (PhaseTable, phase_table, log_jost_modulus, jost_curve,
                   asymptotics_from_potential, asymptotics_from_phase, jost_direct)
from .spectral import (spectral_density, dsigma_density, g_transform, gl_kernel,
                       kernel_matrix, export_kernel)
from .report import __version__

__all__ = [
    "MorseComponent", "ReferencePotential", "load_config", "bundled_config",
    "free_potential", "moments", "BoundState", "BoundSpectrum", "find_eigenvalues",
    "norming_constants", "PhaseShiftCurve", "build_curve", "phase_shift",
    "levinson_residual", "PhaseTable", "phase_table", "log_jost_modulus", "jost_curve",
    "asymptotics_from_potential", "asymptotics_from_phase", "jost_direct",
    "spectral_density", "dsigma_density", "g_transform", "gl_kernel", "kernel_matrix",
    "export_kernel", "__version__",
]
