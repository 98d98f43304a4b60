"""Per-class logit norm-scaling and OoD detection metrics."""

from ._normscale import (  # noqa: F401
    ClassStats,
    NormscaleError,
    Origin,
    StreamMode,
    StreamState,
    aupr,
    auroc,
    energy_score,
    expected_calibration_error,
    fit_class_stats,
    fpr_at_tpr,
    generate_fig1_like,
    msp_score,
    norm_scale,
    read_logits,
    roc_points,
    score_stream,
    softmax,
    stream_init,
    stream_update,
    tau_norm_scale,
    temperature_scale,
    write_logits,
)

__version__ = "0.1.0"
