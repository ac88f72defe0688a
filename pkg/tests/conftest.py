from __future__ import annotations

import pytest
from ncse.encoder import EncoderModel, TrainingTrace, train_encoder
from ncse.motion import MotionDataset, synth_dataset

SYNTH_SEED = 3
LATENT_DIM = 16


@pytest.fixture(scope="session")
def dataset() -> MotionDataset:
    return synth_dataset(8, joint_count=4, seed=SYNTH_SEED)


@pytest.fixture(scope="session")
def trained(dataset: MotionDataset) -> tuple[EncoderModel, TrainingTrace]:
    return train_encoder(dataset, p=LATENT_DIM, epochs=400, lr=0.01, seed=0)
