from typing import Union

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, model_validator

from multipitch.datasets import CONTEXT, PATCH_FRAMES, N_PITCHES, TrackFeatures
from multipitch.exceptions import ShapeError, TrackTooShortError
from multipitch.models import MultipitchNet
from multipitch.signal import HcqtTensor


class TrackPrediction(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    track_id: str = ""
    activations: np.ndarray  # [frames, 72]

    @model_validator(mode="after")
    def check_shape(self):
        if self.activations.ndim != 2 or self.activations.shape[1] != N_PITCHES:
            raise ShapeError(f"Activations must be [frames, {N_PITCHES}], got {self.activations.shape}")
        return self

    @property
    def n_frames(self) -> int:
        return self.activations.shape[0]


def _values(hcqt: Union[HcqtTensor, np.ndarray]) -> np.ndarray:
    return hcqt.values if isinstance(hcqt, HcqtTensor) else np.asarray(hcqt)


@torch.no_grad()
def predict_track(
    model: MultipitchNet,
    hcqt: Union[HcqtTensor, np.ndarray],
    track_id: str = "",
    batch_size: int = 64,
    device: str = "cpu",
) -> TrackPrediction:
    """Pitch activations for every frame of a track.

    The HCQT is edge-padded by 37 frames on both sides so that the first and
    last frames also sit at the centre of a full 75-frame window.
    """
    values = _values(hcqt)
    n_frames = values.shape[1]
    if n_frames < PATCH_FRAMES:
        raise TrackTooShortError(
            f"Track {track_id or '<unnamed>'} has {n_frames} frames, prediction needs {PATCH_FRAMES}"
        )

    dtype = next(model.parameters()).dtype
    model.eval()
    model.to(device)
    padded = np.pad(values, ((0, 0), (CONTEXT, CONTEXT), (0, 0)), mode="edge")
    # [6, frames, 216, 75] views, one window per output frame
    windows = np.lib.stride_tricks.sliding_window_view(padded, PATCH_FRAMES, axis=1)

    out = np.empty((n_frames, N_PITCHES), dtype=np.float32)
    for start in range(0, n_frames, batch_size):
        stop = min(start + batch_size, n_frames)
        chunk = np.ascontiguousarray(windows[:, start:stop].transpose(1, 0, 3, 2))
        batch = torch.from_numpy(chunk).to(device=device, dtype=dtype)
        out[start:stop] = model(batch).pitch_activity.cpu().numpy()
    return TrackPrediction(track_id=track_id, activations=out)


def predict_features(model: MultipitchNet, track: TrackFeatures, **kwargs) -> TrackPrediction:
    return predict_track(model, track.hcqt, track_id=track.track_id, **kwargs)
