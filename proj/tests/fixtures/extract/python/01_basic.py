def add(a, b):
    """Adds two numbers."""
    return a + b


def sub(a, b):
    return a - b


def greet(name: str = "world") -> str:
    '''Return a greeting.

    The greeting is addressed to ``name``.
    '''
    return f"Hello, {name}!"
