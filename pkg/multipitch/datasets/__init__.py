from .annotations import NoteEvent, load_notes, read_note_table, write_note_table
from .augment import (
    NO_AUGMENTATION,
    AugmentationPolicy,
    augment_noise,
    augment_random_eq,
    augment_transpose,
    augment_tune,
    eq_weights,
)
from .features import ExtractResult, extract_track, feature_paths, load_features
from .patches import (
    CONTEXT,
    MAX_POLYPHONY,
    PATCH_FRAMES,
    Patch,
    PatchSequence,
    TrackFeatures,
    build_corpus,
    choose_stride,
    count_patches,
    polyphony_of,
    sample_patches,
)
from .pianoroll import N_PITCHES, PianoRoll, load_pianoroll, rasterize, save_pianoroll
from .records import (
    DatasetId,
    TrackRecord,
    expand_partial_mixes,
    index_by_id,
    load_track_audio,
    read_manifest,
    write_manifest,
)
from .streams import Batch, TrainStream, ValStream, collate
from .synth import synthesize_corpus, synthesize_track
