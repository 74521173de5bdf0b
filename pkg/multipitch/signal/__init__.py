from .audio import (
    SAMPLE_RATE,
    AudioTrack,
    TuningEstimate,
    estimate_tuning,
    load_audio,
    write_audio,
)
from .hcqt import (
    FRAME_RATE,
    HARMONICS,
    HOP_LENGTH,
    N_BINS,
    HcqtTensor,
    bin_frequencies,
    compute_hcqt,
    frame_time,
    frame_times,
    load_hcqt,
    log_compress,
    min_samples,
    n_frames_for,
    save_hcqt,
)
