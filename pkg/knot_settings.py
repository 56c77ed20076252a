#!/usr/bin/env python3
"""
Runtime configuration for the quantized knot toolkit
Reads enumeration caps and search limits from the environment (.env supported)
"""

import os
import logging
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

BASE_DIR = Path(__file__).resolve().parent


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not an integer, using {default}")
        return default
    if value < 0:
        logger.warning(f"Ignoring {name}={raw!r}: negative, using {default}")
        return default
    return value


# Enumeration caps
MAX_CROSSINGS = _env_int('QKNOT_MAX_CROSSINGS', 20)  # 2^20 smoothings
MAX_HOMOLOGY_CROSSINGS = _env_int('QKNOT_MAX_HOMOLOGY_CROSSINGS', 14)
TORSION_MAX_DIM = _env_int('QKNOT_TORSION_MAX_DIM', 512)  # Smith form only below this side length

# Search limits
MAX_STATES = _env_int('QKNOT_MAX_STATES', 200000)
MAX_DEPTH = _env_int('QKNOT_MAX_DEPTH', 64)
MAX_GRAPH_VERTICES = _env_int('QKNOT_MAX_GRAPH_VERTICES', 10)

LOG_LEVEL = os.environ.get('QKNOT_LOG_LEVEL', 'WARNING').upper()
DATA_DIR = Path(os.environ.get('QKNOT_DATA_DIR', str(BASE_DIR / 'data')))


def current_limits():
    """SearchLimits built from the configured caps"""
    from quantum_core import SearchLimits
    return SearchLimits(max_states=MAX_STATES, max_depth=MAX_DEPTH)


def data_path(name: str) -> Path:
    """Path of a shipped data file"""
    return DATA_DIR / name
