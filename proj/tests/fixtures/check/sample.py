def add(a, b):
    """Computes the sum."""
    return a + b


def get_name(self):
    return self._name
