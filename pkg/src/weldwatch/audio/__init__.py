"""Audio: WAV ingestion, spectrograms, streaming, and the 1D-CNN model."""

from .model import (
    AudioAeConfig,
    AudioAutoencoder,
    AudioTrainRecipe,
    audio_frame_scores,
    build_audio_ae,
    train_audio_ae,
)
from .stft import (
    Spectrogram,
    StftConfig,
    buffer_size,
    load_spectrogram,
    model_latency_ms,
    save_spectrogram,
    stft_magnitude,
)
from .stream import StreamingStft
from .wavio import read_wav, write_wav

__all__ = [
    "AudioAeConfig",
    "AudioAutoencoder",
    "AudioTrainRecipe",
    "audio_frame_scores",
    "build_audio_ae",
    "buffer_size",
    "train_audio_ae",
    "load_spectrogram",
    "model_latency_ms",
    "read_wav",
    "save_spectrogram",
    "Spectrogram",
    "StftConfig",
    "stft_magnitude",
    "StreamingStft",
    "write_wav",
]
