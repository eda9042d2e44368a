"""
Caching utilities for expensive, deterministic laboratory results.
"""

import hashlib
import json
import logging
from typing import Any, Callable

from django.conf import settings
from django.core.cache import cache

logger = logging.getLogger('apps.common')


class CacheKeys:
    """Cache key templates for the laboratory."""

    FREQUENCY_SERIES = "oscillator:frequency:{fingerprint}"
    ENERGY_SERIES = "oscillator:energy:{fingerprint}"
    KEPLER_PRECESSION = "kepler:precession:{fingerprint}"

    @staticmethod
    def fingerprint(*parts: Any) -> str:
        """Stable digest of JSON-serializable parts (floats by repr)."""
        payload = json.dumps(parts, sort_keys=True, default=repr)
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:32]


class CacheManager:
    """Centralized cache access; failures degrade to recomputation."""

    @staticmethod
    def get(key: str, default: Any = None) -> Any:
        """Get value from cache."""
        try:
            return cache.get(key, default)
        except Exception as e:
            logger.error(f"Cache get error for key {key}: {e}")
            return default

    @staticmethod
    def set(key: str, value: Any, timeout: int = None) -> bool:
        """Set value in cache."""
        try:
            cache.set(key, value, timeout if timeout is not None else settings.SERIES_CACHE_TIMEOUT)
            logger.debug(f"Cache set for key: {key}")
            return True
        except Exception as e:
            logger.error(f"Cache set error for key {key}: {e}")
            return False

    @staticmethod
    def get_or_compute(key: str, compute: Callable[[], Any], timeout: int = None) -> Any:
        """Return the cached value for key, computing and storing it on a miss."""
        sentinel = object()
        value = CacheManager.get(key, sentinel)
        if value is not sentinel:
            logger.debug(f"Cache hit for key: {key}")
            return value
        value = compute()
        CacheManager.set(key, value, timeout)
        return value
