"""Fisher-knot spline sketching for TCSPC fluorescence lifetime estimation."""

from ._sketchflim import (
    BiParams,
    FitResult,
    IrfSpec,
    MonoParams,
    ParamRanges,
    SketchflimError,
    TimeAxis,
    build_irf,
    crb_mean_tau,
    fisher_knots,
    fit,
    fxp_sketch_timestamps,
    generate_trials,
    histogram_to_timestamps,
    mean_lifetime,
    model_curve,
    parse_config,
    phasor,
    sample_histogram,
    scalar_metrics,
    sketch_histogram,
    sketch_timestamps,
    ssim,
    uniform_knots,
)

__all__ = [name for name in dir() if not name.startswith("_")]
