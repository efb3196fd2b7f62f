"""Palm measures, autocorrelation and diffraction of stationary point processes.

Simulators for point processes and binary lattice fields, estimators for the
autocorrelation / Palm intensity / periodogram, closed-form spectral models,
and the cut-and-project machinery for model sets.
"""

from ._kernels import BACKEND
from ._version import __version__
from .measure import (AtomicMeasure, CorrelationSequence, DimensionError, SpectralModel,
                      arcsine_coefficients, arcsine_f, arcsine_transform, convolve,
                      fourier_at, lattice_reps, periodize, reflect)
from .pointset import (PointSet, Window, count_in, pair_differences,
                       pair_differences_bruteforce, restrict, translate)
from .generators import (BinaryField, Seed, bernoulli_field, bernoulli_marks, binomial,
                         gaussian_threshold_field, gaussian_threshold_field_spectral,
                         markov_field_1d, palm_sample_lattice, poisson, product_field,
                         stationarize)
from .estimators import (ConvergenceReport, CoverageError, SpectralEstimate, autocorrelation,
                         bernoulli_spectral_model, comb_spectral_model, convergence_study,
                         correlation_estimate, diffraction_coefficients, find_peaks_1d,
                         lattice_autocorrelation, markov_spectral_model, palm_intensity,
                         periodogram, periodogram_grid, periodogram_line)
from .cutproject import (QuadraticIrrational, Splitter, bragg_peak_table, check_injectivity,
                         compute_alpha, decompose, direction_independent, fibonacci_splitter,
                         model_set, orth_project, palm_pushforward, project, psi, psi_hat,
                         theoretical_diffraction, theoretical_gamma)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
