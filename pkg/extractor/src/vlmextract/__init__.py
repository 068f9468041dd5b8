"""Embedding extraction from pretrained vision and language checkpoints
into the EMB1 interchange format."""

from .extract import TEXT_POLICY, VISION_POLICY, ExtractError, ExtractJob, extract
from .manifest import ManifestError, ManifestItem, load_manifest

__version__ = "0.1.0"
