"""Extraction configuration.

The embedding file format this package emits is defined over 64-frame
context windows and 2304-d vectors, so those two numbers are fixed;
the fields exist so a run's manifest records them explicitly.
"""

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

WINDOW_FRAMES = 64
EMBEDDING_DIM = 2304

# Published checkpoint of the default backbone. Resolving it requires
# the file to be present locally (see encoders.resolve_encoder).
DEFAULT_CHECKPOINT = (
    "slowfast_r101_4x16x1_256e_kinetics400_rgb_20210218-d8b58813.pth"
)


@dataclass(frozen=True)
class BridgeConfig:
    video: Path
    output: Path
    checkpoint: str = DEFAULT_CHECKPOINT
    window_frames: int = WINDOW_FRAMES
    stride: int = 1
    device: str = "cpu"
    sample_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "video", Path(self.video))
        object.__setattr__(self, "output", Path(self.output))
        if self.window_frames != WINDOW_FRAMES:
            raise ConfigError(
                f"the embedding format is defined over {WINDOW_FRAMES}-frame "
                f"windows, got window_frames={self.window_frames}"
            )
        if self.stride != 1:
            raise ConfigError(
                f"consumers expect one vector per frame, so the stride is "
                f"fixed at 1, got {self.stride}"
            )
        if not self.checkpoint:
            raise ConfigError("checkpoint identifier must not be empty")

    def resolved_sample_id(self):
        return self.sample_id or self.video.stem
