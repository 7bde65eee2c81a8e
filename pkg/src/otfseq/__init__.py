"""Link-level OTFS simulation with sparsified MMSE turbo equalization."""

from ._kernels import BACKEND
from .channel import (
    ChannelRealization,
    ChannelStatistics,
    apply_channel,
    build_dd_matrix,
    build_time_matrix,
    sample_channel,
)
from .coding import (
    CodeConfig,
    conv_encode,
    deinterleave,
    interleave,
    qpsk_hard_bits,
    qpsk_map,
    siso_decode,
)
from .config import SimConfig, config_hash, load_config, parse_config
from .equalizer import (
    EqualizerConfig,
    FrameResult,
    SoftSymbolState,
    build_covariance,
    equalize_frame,
    estimate_initial,
    estimate_subsequent,
    extrinsic_llrs,
    update_priors,
)
from .errors import ConfigError, NumericalError
from .fspai import CholeskyFactor, apply_inverse, fspai, kaporin_number
from .gmres import GmresReport, chebyshev_bound, eigen_extremes, gmres
from .grid import OtfsGrid, add_cp, demodulate, isfft, modulate, sfft, strip_cp
from .harness import (
    noise_from_ebn0,
    run_ber,
    run_residuals,
    run_sparsity,
    run_xivar,
    simulate_frame,
)
from .sparse import (
    DegreeCdf,
    SparseHermitianMatrix,
    degree_cdf,
    jacobi_sparsify,
    node_sparsify,
    sparsify,
)

__version__ = "0.1.0"
