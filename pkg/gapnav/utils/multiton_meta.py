import threading
from collections.abc import Hashable


class MultitonMeta(type):
    """Caches one instance per hashable constructor key.

    Rollout workers build cameras concurrently, so creation is serialised per class.
    """

    def __init__(cls, name, bases, namespace):
        super().__init__(name, bases, namespace)
        cls._instances: dict[Hashable, object] = {}
        cls._lock = threading.Lock()

    def __call__(cls, key: Hashable):
        instance = cls._instances.get(key)
        if instance is None:
            with cls._lock:
                instance = cls._instances.get(key)
                if instance is None:
                    instance = super().__call__(key)
                    cls._instances[key] = instance
        return instance

    def cached_keys(cls) -> list[Hashable]:
        return list(cls._instances)

    def clear(cls) -> None:
        with cls._lock:
            cls._instances.clear()
