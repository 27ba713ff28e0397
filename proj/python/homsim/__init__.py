"""Laser / single-photon two-photon interference simulator."""

from ._core import (
    DomainError,
    FormatError,
    Histogram,
    IoError,
    ModelParams,
    ValidationError,
    auto_correlate,
    background_peak,
    cli,
    cross_correlate,
    fit_hom,
    g2_auto_par,
    g2_auto_perp,
    g2_cross_par,
    g2_cross_perp,
    normalization,
    optimal_eta,
    parse_csv,
    parse_duration_ps,
    parse_frequency_hz,
    read_csv,
    read_ptt,
    simulate,
    v_hom,
    v_same_port,
    write_csv,
    write_ptt,
)

__all__ = [name for name in dir() if not name.startswith("_")]
