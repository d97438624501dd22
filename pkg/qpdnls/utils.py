import random
import numpy as np
import builtins
import fcntl

import torch

def print(*args, is_print_rank=True, **kwargs):
    """Console output shared by parallel sweep workers; one lock per line so rows never interleave."""
    if not is_print_rank: return
    with open(__file__, "r") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            builtins.print(*args, **kwargs)
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)

def warn(message, **kwargs):
    print(f"Warning: {message}", **kwargs)

def set_all_seed(seed):
    for module in [random, np.random]: module.seed(seed)
    torch.manual_seed(seed)

_UNITS = [(1e12, "T"), (1e9, "B"), (1e6, "M"), (1e3, "K")]

def to_readable_format(num, precision=2):
    """Enumeration sizes in budget messages, e.g. 389017 -> '389.02K'."""
    for scale, suffix in _UNITS:
        if num >= scale:
            return f"{num / scale:.{precision}f}{suffix}"
    return f"{num:.{precision}f}"

def format_float(x):
    # shortest repr that round-trips, so artifacts are bit-exact
    return repr(float(x))
