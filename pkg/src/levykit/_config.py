import os

_threads = None


def set_threads(n):
    """Cap internal parallelism (FFT workers, sampling chunks). None = all cores."""
    global _threads
    _threads = None if n is None else max(1, int(n))


def threads() -> int:
    return _threads or os.cpu_count() or 1
