"""Finite-block simulator for a single half-duplex dynamic decode-and-forward
relay link: channel model, rotated-QAM and matrix-permutation codebooks,
lattice and exhaustive decoders, relay decision rules, destination decoders,
closed-form tradeoff curves, and a reproducible Monte Carlo harness.
"""

from .channel import (
    ChannelRealization,
    SystemParams,
    alamouti_combine,
    alamouti_relay_signal,
    combined_gain_vector,
    destination_receive,
    draw_channel,
    relay_receive,
)
from .destination import (
    DecodeResult,
    build_glrt_tables,
    glrt_decode,
    glrt_decode_lattice,
    glrt_decode_points,
    ml_decode_combined,
    ml_decode_genie,
    rad_detect,
    rad_pairwise_closed_form,
)
from .dmt import (
    OutageResult,
    d_bar,
    d_m_exponent,
    decision_time_pmf_closed,
    dmt_curve_rows,
    dmt_finite,
    dmt_infinite,
    msc_mutual_info,
    outage_mc,
    pareto_dmt,
    pareto_fractions,
    tx_div_bound,
)
from .harness import (
    CalibrationResult,
    ErrorStats,
    SimConfig,
    TrialOutcome,
    calibrate_tau,
    run_point,
    run_sweep,
    run_trial,
    sweep_to_csv,
)
from .lattice import (
    SPHERE_CAP_DEFAULT,
    CosetCodebook,
    QamCodebook,
    build_rotation,
    complex_to_real_matrix,
    complex_to_real_vector,
    real_to_complex_vector,
)
from .lattice_decoder import (
    CandidateResult,
    CosetDecodeResult,
    GdfeFilters,
    QamDecodeResult,
    SphereResult,
    decode_coset,
    decode_qam,
    mmse_gdfe_filters,
    sphere_candidates,
    sphere_closest,
)
from .relay import (
    TAU_GRID_DEFAULT,
    ExhaustiveRelayDecoder,
    ForneyConfig,
    LatticeRelayDecoder,
    RelayDecision,
    bounded_distance_decide,
    bounded_distance_delta,
    bounded_distance_run,
    fixed_rule_run,
    forney_accept,
    noise_tail_bound,
    phi1,
    phi2,
    phi3,
    phiF_run,
    relay_outage,
)
from .special import gammainc_lower
from .udm import UdmCodebook, UdmSet, build_udm, udm_text, udm_verify

__version__ = "0.1.0"
