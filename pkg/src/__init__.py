"""Exact certificates for thick families, diamond embeddings and martingale extraction."""

__version__ = "0.1.0"
__description__ = "Certify metric thickness, bilipschitz embeddings and extracted martingales exactly"

from .cli import run
from .config import get_config
from .embeddings import distortion, stegall_diamond_embedding, tree_to_diamond_partial_embedding
from .families import DiamondFamily, LaaksoFamily
from .generators import diamond, laakso2
from .geodesics import laakso_thick_witness, verify_iso_witness, verify_thick_witness
from .martingale import extract_martingale
from .oracles import create_oracle
from .reflexivity import forward_embedding_check
from .selftest import run_selftest
from .types import *

__all__ = [
    "run",
    "get_config",
    "diamond",
    "laakso2",
    "DiamondFamily",
    "LaaksoFamily",
    "laakso_thick_witness",
    "verify_thick_witness",
    "verify_iso_witness",
    "create_oracle",
    "extract_martingale",
    "stegall_diamond_embedding",
    "tree_to_diamond_partial_embedding",
    "distortion",
    "forward_embedding_check",
    "run_selftest",
]
