import os
from dotenv import load_dotenv

# .env in the working directory overrides nothing already exported
load_dotenv()

CACHE_ROOT = os.getenv("MULTIPITCH_CACHE_ROOT", "cache")
LOG_LEVEL = os.getenv("MULTIPITCH_LOG_LEVEL", "INFO").upper()
DEVICE = os.getenv("MULTIPITCH_DEVICE", "cpu")


def cache_root() -> str:
    """Cache root, re-read so tests and subprocesses can override it."""
    return os.getenv("MULTIPITCH_CACHE_ROOT", CACHE_ROOT)


def musicnet_metadata_path() -> str:
    """MusicNet's own ``musicnet_metadata.csv``; empty when not configured."""
    return os.getenv("MULTIPITCH_MUSICNET_METADATA", "")
