"""esneq: echo state network channel equalization for OFDM links.

The package derives "designed" ESN input/reservoir weights from wireless
channel statistics (PCA of the frequency-domain channel inverse, rational
approximation of the basis, partial-fraction decomposition into single-pole
neurons) and benchmarks the resulting equalizer against its randomly
initialized counterpart and classical per-subcarrier receivers.
"""

__version__ = "0.1.0"

from .basis import (
    BasisSet,
    CovarianceEstimate,
    empirical_covariance,
    epsilon_rank,
    optimum_basis,
    project_reconstruct,
    stack_real_imag,
    unstack_real_imag,
)
from .channel import (
    ChannelRealization,
    ChannelStatistics,
    RngStream,
    channel_inverse_freq,
    is_minimum_phase,
    sample_exp_pdp,
    sample_gaussian,
    sample_min_phase,
    sample_tdl,
)
from .esn import (
    EsnModel,
    StateTrajectory,
    init_optimum,
    init_random,
    model_from_dict,
    model_to_dict,
    predict,
    run_states,
    train_readout,
)
from .numkit import (
    EigenResult,
    dft_response,
    poly_roots,
    ridge_pinv_solve,
    spectral_radius,
    sym_eig,
)
from .ofdm import (
    OfdmConfig,
    SerResult,
    Subframe,
    apply_channel,
    build_subframe,
    demap,
    ebn0_to_noise_var,
    esn_equalize,
    ls_estimate,
    measure_ser,
    mmse_equalize,
    mmse_estimate,
    modulate,
    zf_perfect_csi,
)
from .ratfit import (
    PoleResidueSet,
    RationalApprox,
    eval_pf,
    eval_rational,
    expand_pole_residue,
    fit_rational,
    partial_fractions,
    stabilize_poles,
)
