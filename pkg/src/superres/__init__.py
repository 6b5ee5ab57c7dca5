"""Two-phase super-resolution of spike trains from low-frequency Fourier data.

Greedy Slepian-filtered peak picking provides an initial position estimate,
which box-constrained projected Newton refinement then sharpens to (in the
noise-free case) machine precision.
"""

from .circle import dynamic_range, hausdorff, separation, wrap, wrap_dist, wrap_sub
from .experiments import (
    ExperimentConfig,
    GradCheckReport,
    TrialRecord,
    gradcheck,
    run_monte_carlo,
    run_trial,
    sample_instance,
)
from .peaks import PeakConfig, PeakResult, choose_eta, find_peaks
from .refine import (
    BoxConstraint,
    DegenerateDictionaryError,
    DictionaryMatrix,
    NewtonConfig,
    SolveReport,
    build_G,
    eps_active_set,
    gradient_F,
    hessian_F,
    least_squares_beta,
    objective_F,
    project_box,
    reduced_hessian,
    run_gradient_projection,
    run_newton,
    stationarity_residual,
)
from .slepian import CriteriaReport, SlepianKernel, build_kernel, check_criteria, kernel_derivative_coeffs
from .spectral import (
    SpikeTrain,
    Spectrum,
    add,
    eval_grid,
    eval_point,
    load_spectrum_csv,
    pointwise_mul,
    save_spectrum_csv,
    spike_fourier,
    synth_noise,
)

__version__ = "0.1.0"
