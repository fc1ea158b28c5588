"""Zero-shot imitation by nearest-situation search over expert demonstrations."""

from .encoder import EncoderConfig, GridEncoder, Observation
from .episode import EpisodeLog, SuccessCriterion, run_episode, success_detector
from .index import FrameRef, LinearIndex, PartitionedIndex, SearchResult, build_index
from .latent import Dataset, Trajectory, l1_distance, validate_dataset
from .policy import PRESETS, EventKind, PolicyConfig, SearchEvent, ZipPolicy, policy_init, policy_step

__all__ = [
    "Dataset", "EncoderConfig", "EpisodeLog", "EventKind", "FrameRef", "GridEncoder", "LinearIndex",
    "Observation", "PRESETS", "PartitionedIndex", "PolicyConfig", "SearchEvent", "SearchResult",
    "SuccessCriterion", "Trajectory", "ZipPolicy", "build_index", "l1_distance", "policy_init",
    "policy_step", "run_episode", "success_detector", "validate_dataset",
]

__version__ = "0.1.0"
