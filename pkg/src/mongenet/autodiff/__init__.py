"""Exact derivatives: hyperdual input Hessians composed with a reverse-mode tape."""

from . import tape
from .hyperdual import (
    HyperDual,
    SecondOrderJet,
    eval_jet,
    eval_jets,
    hessian_determinant,
    where,
)
from .linalg import det, det_upper, pair_indices
from .tape import Tape, UnsupportedPrimitiveError, Var, value_and_grad, value_of


def exp(x):
    return x.exp() if isinstance(x, HyperDual) else tape.exp(x)


def log(x):
    return x.log() if isinstance(x, HyperDual) else tape.log(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, HyperDual) else tape.sqrt(x)


def activation(x, name):
    return x.activation(name) if isinstance(x, HyperDual) else tape.activation(x, name)


def sum(x, axis=-1):  # noqa: A001
    return x.sum(axis=axis) if isinstance(x, HyperDual) else tape.sum(x, axis=axis)


class Field:
    """Wrap a vectorized function of points ``(P, n) -> (P,)`` as a scalar field.

    ``fn`` must be written with the dispatching functions of this package so it
    accepts plain arrays and :class:`HyperDual` points alike.
    """

    def __init__(self, fn, input_dim):
        self.fn = fn
        self.input_dim = int(input_dim)

    def __call__(self, x):
        return self.fn(x)


__all__ = [
    "Field", "HyperDual", "SecondOrderJet", "Tape", "UnsupportedPrimitiveError", "Var",
    "activation", "det", "det_upper", "eval_jet", "eval_jets", "exp",
    "hessian_determinant", "log", "pair_indices", "sqrt", "sum", "tape",
    "value_and_grad", "value_of", "where",
]
