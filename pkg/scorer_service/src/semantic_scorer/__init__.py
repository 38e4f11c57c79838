"""Sidecar HTTP service scoring semantic similarity of text pairs."""

from .encoder import DEFAULT_MODEL_ID, HashContextEncoder, load_encoder
from .service import create_app

__version__ = "0.1.0"
