"""
Sustained harmonic walking detection from raw tri-axial accelerometry.

The detector slides a Hann-tapered window over each axis, scores every
candidate walking frequency with a harmonic comb, thresholds the best score
and fuses overlapping windows into per-second walking flags, walking
frequencies and vector-magnitude counts.
"""
from shwalk._backend import BACKEND
from shwalk.comb import (
    CombSpec,
    DetectionParams,
    WindowDecision,
    build_comb,
    decide_window,
    score,
    spectrum_areas,
)
from shwalk.pipeline import DetectionResult, Detector, detect
from shwalk.segmentation import (
    Bout,
    EpochRecord,
    EpochTable,
    extract_bouts,
    fuse_epochs,
    hourly_walking_matrix,
    iwf_distribution,
    summarize_bouts,
)
from shwalk.signal import TriaxialSignal, epoch_vm_series, vector_magnitude, vm_count
from shwalk.spectral import FrequencyGrid, Spectrum, WindowConfig, hann_weights, sliding_spectra, window_spectrum

__version__ = "0.1.0"
