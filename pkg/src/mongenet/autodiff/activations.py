"""Elementwise activations and their derivatives up to third order.

Training differentiates a loss that already contains second input-derivatives
of the network, so every activation must supply derivatives of orders 0..3.
"""

import numpy as np

MAX_ORDER = 3


def _sigmoid(t):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def _softplus(t):
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def softplus(t, order=0):
    if order == 0:
        return _softplus(t)
    s = _sigmoid(t)
    if order == 1:
        return s
    if order == 2:
        return s * (1.0 - s)
    if order == 3:
        return s * (1.0 - s) * (1.0 - 2.0 * s)
    raise ValueError(f"softplus derivative of order {order} not available")


def sigmoid(t, order=0):
    s = _sigmoid(t)
    if order == 0:
        return s
    ds = s * (1.0 - s)
    if order == 1:
        return ds
    if order == 2:
        return ds * (1.0 - 2.0 * s)
    if order == 3:
        return ds * (1.0 - 6.0 * s + 6.0 * s * s)
    raise ValueError(f"sigmoid derivative of order {order} not available")


def tanh(t, order=0):
    th = np.tanh(t)
    if order == 0:
        return th
    sech2 = 1.0 - th * th
    if order == 1:
        return sech2
    if order == 2:
        return -2.0 * th * sech2
    if order == 3:
        return sech2 * (6.0 * th * th - 2.0)
    raise ValueError(f"tanh derivative of order {order} not available")


def exp(t, order=0):
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"exp derivative of order {order} not available")
    return np.exp(t)


ACTIVATIONS = {
    "softplus": softplus,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "exp": exp,
}

# convex and nondecreasing, i.e. admissible inside an input convex network
CONVEX_NONDECREASING = frozenset({"softplus"})


def activation(name, t, order=0):
    try:
        fn = ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}") from None
    return fn(t, order)
