# %% [markdown]
"""
# Second derivatives of a network, and why input-convex networks help

The Monge-Ampere residual needs ``det D^2 u`` of a neural network at every
collocation point, plus the gradient of that quantity with respect to the
network weights. This script walks through the two pieces that make this
cheap and exact: hyperdual numbers for the input Hessian and a small tape
for the parameter gradient.
"""

# %%
import numpy as np

from mongenet import autodiff as ad
from mongenet import networks as nw
from mongenet.losses import equation_loss

# %% [markdown]
"""
## Exact Hessians from hyperdual points

A hyperdual point carries one tangent per coordinate and one cross term per
pair of coordinates. Pushing it through the network gives value, gradient and
the upper triangle of the Hessian in a single pass.
"""

# %%
spec = nw.NetworkSpec.standard(2, (10,) * 5)
net = nw.NetworkField(spec, nw.init_params(spec, 0))
print("parameters:", nw.param_count(spec))

x = np.array([0.3, 0.7])
jet = ad.eval_jet(net, x)
print("u      =", jet.value)
print("grad u =", jet.gradient)
print("hess u =\n", jet.hessian)

# compare with a plain central difference of the values
h = 1e-4
e = np.eye(2)
fd = np.array([[(nw.evaluate(net, x + h * e[i] + h * e[j]) - nw.evaluate(net, x + h * e[i] - h * e[j])
                 - nw.evaluate(net, x - h * e[i] + h * e[j]) + nw.evaluate(net, x - h * e[i] - h * e[j]))
                / (4 * h * h) for j in range(2)] for i in range(2)])
print("max |H - H_fd| =", np.abs(jet.hessian - fd).max())

# %% [markdown]
"""
## Gradients through the determinant

``equation_loss`` is the mean squared residual of ``det D^2 u - f``. Wrapping
the raw parameter vector in a tape variable gives its gradient.
"""

# %%
pts = np.random.default_rng(1).uniform(0, 1, size=(50, 2))
f = np.ones(len(pts))


def loss(raw):
    return equation_loss(nw.NetworkField(spec, raw), pts, f)


val, grad = ad.value_and_grad(loss, net.params.raw)
d = np.random.default_rng(2).normal(size=grad.shape)
eps = 1e-4
fd = (float(loss(net.params.raw + eps * d)) - float(loss(net.params.raw - eps * d))) / (2 * eps)
print(f"E_e = {val:.6f}, directional derivative {grad @ d:.6e} vs finite difference {fd:.6e}")

# %% [markdown]
"""
## Convexity by construction

An input-convex network keeps its hidden-to-hidden weights nonnegative and
uses a convex, nondecreasing activation, so every output is convex in the
input. The chord probe samples random segments and reports the largest
violation of ``u(t x + (1-t) y) <= t u(x) + (1-t) u(y)``; it should never be
positive beyond rounding. A standard network fails the same probe.
"""

# %%
icnn_spec = nw.NetworkSpec.input_convex(2, (10,) * 5)
icnn = nw.NetworkField(icnn_spec, nw.init_params(icnn_spec, 0))
print("input-convex parameters:", nw.param_count(icnn_spec))
print("ICNN max violation:    ", nw.convexity_probe(icnn, 10_000, 0))
print("standard max violation:", nw.convexity_probe(net, 10_000, 0, allow_standard=True))
