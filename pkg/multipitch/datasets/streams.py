from typing import Iterator, List, NamedTuple

import numpy as np
import torch
from torch.utils.data import Dataset

from multipitch.datasets.augment import NO_AUGMENTATION, AugmentationPolicy
from multipitch.datasets.patches import Patch
from multipitch.exceptions import ValidationError
from multipitch.logger_utils import get_logger

logger = get_logger("datasets.streams")


class Batch(NamedTuple):
    inputs: torch.Tensor  # [B, 6, 75, 216]
    pitch: torch.Tensor  # [B, 72], float 0/1
    polyphony: torch.Tensor  # [B], long


def collate(patches: List[Patch], dtype: torch.dtype = torch.float32) -> Batch:
    return Batch(
        inputs=torch.from_numpy(np.stack([p.input for p in patches])).to(dtype),
        pitch=torch.from_numpy(np.stack([p.pitch_target for p in patches])).to(dtype),
        polyphony=torch.tensor([p.polyphony_target for p in patches], dtype=torch.long),
    )


class TrainStream:
    """Endless augmented batches in a seed-derived order.

    The order is reshuffled every time the corpus is exhausted. Single consumer.
    """

    def __init__(
        self,
        dataset: Dataset,
        batch_size: int,
        seed: int,
        policy: AugmentationPolicy = None,
        dtype: torch.dtype = torch.float32,
    ):
        if len(dataset) == 0:
            raise ValidationError("Cannot stream an empty training corpus")
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed
        self.policy = policy if policy is not None else AugmentationPolicy()
        self.dtype = dtype
        self.passes = 0

    def _permutation(self, pass_index: int) -> np.ndarray:
        return np.random.default_rng([self.seed, 0, pass_index]).permutation(len(self.dataset))

    def __iter__(self) -> Iterator[Batch]:
        pass_index = 0
        order = self._permutation(pass_index)
        aug_rng = np.random.default_rng([self.seed, 1, pass_index])
        position = 0
        logger.info(f"Training order seeded with {self.seed}")
        while True:
            patches = []
            while len(patches) < self.batch_size:
                if position == len(order):
                    pass_index += 1
                    self.passes = pass_index
                    order = self._permutation(pass_index)
                    aug_rng = np.random.default_rng([self.seed, 1, pass_index])
                    position = 0
                patch = self.dataset[int(order[position])]
                position += 1
                if self.policy.enabled:
                    patch = self.policy.apply(patch, aug_rng)
                patches.append(patch)
            yield collate(patches, self.dtype)


class ValStream:
    """One ordered, unaugmented pass over a corpus per iteration."""

    def __init__(self, dataset: Dataset, batch_size: int, dtype: torch.dtype = torch.float32):
        if len(dataset) == 0:
            raise ValidationError("Cannot stream an empty validation corpus")
        self.dataset = dataset
        self.batch_size = batch_size
        self.dtype = dtype
        self.policy = NO_AUGMENTATION

    def __len__(self) -> int:
        return -(-len(self.dataset) // self.batch_size)

    def __iter__(self) -> Iterator[Batch]:
        for start in range(0, len(self.dataset), self.batch_size):
            stop = min(start + self.batch_size, len(self.dataset))
            yield collate([self.dataset[i] for i in range(start, stop)], self.dtype)
