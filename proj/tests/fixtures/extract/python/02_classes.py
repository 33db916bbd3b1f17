import os


class Stack:
    """A LIFO container."""

    def __init__(self):
        self._items = []

    def push(self, item):
        """Push an item onto the stack."""
        self._items.append(item)

    @property
    def size(self):
        """Number of stored items."""
        return len(self._items)

    class Iterator:
        def __next__(self):
            r"""Yield the next
            item from the stack."""
            raise StopIteration
