import functools


def cache(fn):
    """Memoize a one-argument function.

    Results are stored forever.
    """
    store = {}

    @functools.wraps(fn)
    def wrapper(arg):
        if arg not in store:
            store[arg] = fn(arg)
        return store[arg]

    return wrapper


@cache
def fib(n):
    """Compute the n-th Fibonacci number."""
    return n if n < 2 else fib(n - 1) + fib(n - 2)


class Config(object):
    @staticmethod
    def load(path):
        """Load the configuration
        stored at path."""
        with open(path) as fh:
            return fh.read()
