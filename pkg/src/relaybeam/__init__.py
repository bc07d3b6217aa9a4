"""Secrecy-rate relay beamforming for amplify-and-forward and decode-and-forward relays."""
from .af import AfAlgorithmConfig, af_achievable, af_secrecy_rate, optimize_af
from .channel import ChannelState, PowerConstraint, derive_af, sample_channel
from .df import (DfChannel, DfConfig, Statistical, WorstCase, df_secrecy_rate,
                 optimize_df_perfect, optimize_df_statistical, optimize_df_worstcase,
                 verify_outage)
from .solution import BeamSolution

__all__ = [
    "AfAlgorithmConfig", "BeamSolution", "ChannelState", "DfChannel", "DfConfig",
    "PowerConstraint", "Statistical", "WorstCase", "af_achievable", "af_secrecy_rate",
    "derive_af", "df_secrecy_rate", "optimize_af", "optimize_df_perfect",
    "optimize_df_statistical", "optimize_df_worstcase", "sample_channel", "verify_outage",
]
__version__ = "0.1.0"
