"""
Backoff/jitter policy for retrying remote VLM requests.
"""
# currently excluded from documentation - see docs/README.md

from random import Random
from typing import Optional


class RetryPolicy:
    """Computes successive delays for a bounded number of retries.

    Each delay doubles the previous one up to ``max_delay``; jitter then subtracts a pseudo-random
    fraction of up to ``jitter_ratio``. A seeded policy yields the same delay sequence every time.

    Not safe for concurrent use; create one per request.
    """
    def __init__(self, max_retries: int, base_delay: float = 1.0, max_delay: float = 30.0,
                 jitter_ratio: float = 0.5, rand_seed: Optional[int] = None):
        self.__max_retries = max_retries
        self.__base_delay = base_delay
        self.__max_delay = max_delay
        self.__jitter_ratio = jitter_ratio
        self.__random = Random(rand_seed)
        self.__retry_count = 0

    @property
    def retry_count(self) -> int:
        return self.__retry_count

    def can_retry(self) -> bool:
        return self.__retry_count < self.__max_retries

    def next_delay(self) -> float:
        """Returns the delay before the next attempt and counts that attempt as a retry."""
        delay = min(self.__base_delay * (2 ** self.__retry_count), self.__max_delay)
        self.__retry_count += 1
        if self.__jitter_ratio:
            delay = delay - (self.__random.random() * self.__jitter_ratio * delay)
        return delay
