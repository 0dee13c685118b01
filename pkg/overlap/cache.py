"""
In-process caching of effective qubit channels.
"""
import logging
import threading
from typing import Optional

import numpy as np
from cachetools import LRUCache

from overlap.config import settings

logger = logging.getLogger(__name__)

# Choi matrices keyed by (code id, gamma); sweeps revisit the same points for both measures
_channel_cache: LRUCache[str, np.ndarray] = LRUCache(maxsize=settings.channel_cache_size)
_lock = threading.Lock()


def cache_key_for_channel(code_id: str, gamma: float) -> str:
    """Generate a cache key for an effective channel."""
    return f"{code_id}:{float(gamma).hex()}"


def get_cached_channel(code_id: str, gamma: float) -> Optional[np.ndarray]:
    """Get a cached Choi matrix if available."""
    key = cache_key_for_channel(code_id, gamma)
    with _lock:
        choi = _channel_cache.get(key)
    return None if choi is None else choi.copy()


def set_cached_channel(code_id: str, gamma: float, choi: np.ndarray) -> None:
    """Cache a Choi matrix."""
    key = cache_key_for_channel(code_id, gamma)
    stored = np.array(choi, copy=True)
    stored.setflags(write=False)
    with _lock:
        _channel_cache[key] = stored
    logger.debug(f"Cached effective channel {key}")


def clear_channel_cache() -> None:
    """Clear all cached channels."""
    with _lock:
        _channel_cache.clear()
    logger.info("Channel cache cleared")


def get_cache_stats() -> dict:
    """Get cache statistics."""
    with _lock:
        return {
            "channels": {
                "size": len(_channel_cache),
                "max_size": _channel_cache.maxsize,
            }
        }
