"""Variational autoencoder with a scalar latent and a multi-lag
reconstruction loss, implemented directly on numpy with exact analytic
gradients.

Encoder: feature row -> depth tanh layers (hidden_dim wide) -> (mu, logvar)
heads.  Decoder: scalar z -> depth tanh layers -> linear head predicting
[i_{t+1}..i_{t+L}, q_{t+1}..q_{t+L}].  Dropout (inverted convention)
applies to the hidden activations of both halves in train mode.

Loss: reconstruction is the mean squared prediction error, reported
per lag as mean over rows of ((di_l)^2 + (dq_l)^2)/2; the KL term against
the standard normal prior is beta-weighted into the total.  At inference
the latent is mu and no noise is drawn.

Stochastic draws in train mode happen in a fixed order per evaluation:
encoder dropout masks layer by layer, then the reparameterization eps,
then decoder masks (mask draws are skipped entirely when dropout_rate is
0).  ``grad(seed=s)`` differentiates exactly the loss realized by
``loss(rng=numpy.random.default_rng(s), mode="train")``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    target_dim: int
    hidden_dim: int = 256
    depth: int = 3
    latent_dim: int = 1
    activation: str = "tanh"
    dropout_rate: float = 0.2

    def __post_init__(self):
        if min(self.input_dim, self.target_dim, self.hidden_dim, self.depth) < 1:
            raise ValueError("all architecture dimensions must be >= 1")
        if self.latent_dim != 1:
            raise ValueError("latent_dim is fixed to 1 in this artifact")
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")


@dataclass
class NetworkParams:
    """All weights of encoder, heads, and decoder.

    ``arrays()`` yields them in the fixed serialization order used by
    checkpoints and by Adam; the same container shape is reused for
    gradients and optimizer moments.
    """

    arch: Architecture
    enc_w: List[np.ndarray]
    enc_b: List[np.ndarray]
    mu_w: np.ndarray
    mu_b: np.ndarray
    lv_w: np.ndarray
    lv_b: np.ndarray
    dec_w: List[np.ndarray]
    dec_b: List[np.ndarray]
    out_w: np.ndarray
    out_b: np.ndarray

    def named_arrays(self):
        out = []
        for j, (w, b) in enumerate(zip(self.enc_w, self.enc_b)):
            out.append((f"enc_w{j}", w))
            out.append((f"enc_b{j}", b))
        out += [("mu_w", self.mu_w), ("mu_b", self.mu_b),
                ("lv_w", self.lv_w), ("lv_b", self.lv_b)]
        for j, (w, b) in enumerate(zip(self.dec_w, self.dec_b)):
            out.append((f"dec_w{j}", w))
            out.append((f"dec_b{j}", b))
        out += [("out_w", self.out_w), ("out_b", self.out_b)]
        return out

    def arrays(self) -> List[np.ndarray]:
        return [a for _, a in self.named_arrays()]

    def copy(self) -> "NetworkParams":
        return _from_arrays(self.arch, [a.copy() for a in self.arrays()])

    @classmethod
    def zeros(cls, arch: Architecture) -> "NetworkParams":
        return _from_arrays(arch, [np.zeros(s) for s in _shapes(arch)])


#: Gradients share the parameter container; shapes are congruent by
#: construction.
Gradients = NetworkParams


@dataclass
class LossBreakdown:
    total: float
    reconstruction: float
    kl: float
    per_lag: List[float] = field(default_factory=list)


def _shapes(arch: Architecture):
    h, n, m = arch.hidden_dim, arch.input_dim, arch.target_dim
    shapes = []
    prev = n
    for _ in range(arch.depth):
        shapes += [(prev, h), (h,)]
        prev = h
    shapes += [(h, 1), (1,), (h, 1), (1,)]
    prev = 1
    for _ in range(arch.depth):
        shapes += [(prev, h), (h,)]
        prev = h
    shapes += [(h, m), (m,)]
    return shapes


def _from_arrays(arch: Architecture, arrays) -> NetworkParams:
    it = iter(arrays)
    enc_w, enc_b = [], []
    for _ in range(arch.depth):
        enc_w.append(next(it))
        enc_b.append(next(it))
    mu_w, mu_b, lv_w, lv_b = next(it), next(it), next(it), next(it)
    dec_w, dec_b = [], []
    for _ in range(arch.depth):
        dec_w.append(next(it))
        dec_b.append(next(it))
    out_w, out_b = next(it), next(it)
    return NetworkParams(arch, enc_w, enc_b, mu_w, mu_b, lv_w, lv_b,
                         dec_w, dec_b, out_w, out_b)


def init_params(arch: Architecture, seed: int) -> NetworkParams:
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    arrays = []
    for shape in _shapes(arch):
        if len(shape) == 1:
            arrays.append(np.zeros(shape))
        else:
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            arrays.append(rng.uniform(-bound, bound, shape))
    return _from_arrays(arch, arrays)


def _as_matrix(x, dim, what):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"{what} must have {dim} columns, got shape {x.shape}")
    return x, single


def _draw_masks(arch: Architecture, rows: int, rng):
    if arch.dropout_rate == 0.0:
        return None
    keep = 1.0 - arch.dropout_rate
    return [
        (rng.random((rows, arch.hidden_dim)) < keep).astype(np.float64)
        for _ in range(arch.depth)
    ]


def _stack_forward(x, weights, biases, masks, keep):
    """Tanh layer stack with cached activations for backprop.

    Returns (output, taus) where taus[j] is the pre-dropout tanh output of
    layer j; the post-dropout activation feeds the next layer.
    """
    taus = []
    h = x
    for j, (w, b) in enumerate(zip(weights, biases)):
        t = np.tanh(h @ w + b)
        taus.append(t)
        h = t if masks is None else t * masks[j] * (1.0 / keep)
    return h, taus


def _require_rng(mode, rng):
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    if mode == "train" and rng is None:
        raise ValueError("train mode needs an rng for dropout/eps draws")


def encode(params: NetworkParams, x, mode: str = "infer", rng=None):
    """Map feature row(s) to (mu, logvar); scalar outputs for a 1-D input."""
    _require_rng(mode, rng)
    arch = params.arch
    x, single = _as_matrix(x, arch.input_dim, "feature row")
    masks = _draw_masks(arch, x.shape[0], rng) if mode == "train" else None
    h, _ = _stack_forward(x, params.enc_w, params.enc_b, masks,
                          1.0 - arch.dropout_rate)
    mu = (h @ params.mu_w + params.mu_b)[:, 0]
    lv = (h @ params.lv_w + params.lv_b)[:, 0]
    if single:
        return float(mu[0]), float(lv[0])
    return mu, lv


def reparameterize(mu, logvar, rng):
    """z = mu + exp(logvar/2) * eps with eps drawn standard normal."""
    mu = np.asarray(mu, dtype=np.float64)
    eps = rng.standard_normal(mu.shape)
    z = mu + np.exp(np.asarray(logvar, dtype=np.float64) / 2.0) * eps
    return float(z) if z.ndim == 0 else z


def decode(params: NetworkParams, z, mode: str = "infer", rng=None):
    """Map latent value(s) to the 2L-wide prediction vector(s)."""
    _require_rng(mode, rng)
    arch = params.arch
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 0
    zmat = z.reshape(-1, 1)
    masks = _draw_masks(arch, zmat.shape[0], rng) if mode == "train" else None
    h, _ = _stack_forward(zmat, params.dec_w, params.dec_b, masks,
                          1.0 - arch.dropout_rate)
    pred = h @ params.out_w + params.out_b
    return pred[0] if single else pred


def _series_values(obj, what):
    values = getattr(obj, "values", obj)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"{what} must be a 2-D row matrix")
    return values


def _reconstruction(pred: np.ndarray, targets: np.ndarray):
    """Mean squared error plus the per-lag breakdown (test seam)."""
    sq = (pred - targets) ** 2
    L = targets.shape[1] // 2
    per_lag = [float(np.mean((sq[:, l] + sq[:, L + l]) / 2.0)) for l in range(L)]
    return float(np.mean(sq)), per_lag


def _kl_terms(mu, lv):
    return 0.5 * (mu * mu + np.exp(lv) - lv - 1.0)


def _forward(params, X, Y, mode, rng):
    """Shared forward pass; returns everything backprop needs."""
    arch = params.arch
    keep = 1.0 - arch.dropout_rate
    R = X.shape[0]
    if mode == "train":
        enc_masks = _draw_masks(arch, R, rng)
        eps = rng.standard_normal((R, 1))
        dec_masks = _draw_masks(arch, R, rng)
    else:
        enc_masks = eps = dec_masks = None
    h_enc, enc_taus = _stack_forward(X, params.enc_w, params.enc_b, enc_masks, keep)
    mu = h_enc @ params.mu_w + params.mu_b
    lv = h_enc @ params.lv_w + params.lv_b
    sigma = np.exp(lv / 2.0)
    z = mu + sigma * eps if mode == "train" else mu
    h_dec, dec_taus = _stack_forward(z, params.dec_w, params.dec_b, dec_masks, keep)
    pred = h_dec @ params.out_w + params.out_b
    return {
        "mu": mu, "lv": lv, "sigma": sigma, "z": z, "pred": pred,
        "h_enc": h_enc, "h_dec": h_dec, "enc_taus": enc_taus,
        "dec_taus": dec_taus, "enc_masks": enc_masks, "dec_masks": dec_masks,
        "eps": eps, "keep": keep,
    }


def _breakdown(fwd, Y, beta_kl):
    rec, per_lag = _reconstruction(fwd["pred"], Y)
    kl = float(np.mean(_kl_terms(fwd["mu"], fwd["lv"])))
    return LossBreakdown(
        total=rec + beta_kl * kl, reconstruction=rec, kl=kl, per_lag=per_lag
    )


def _check_pair(params, features, targets):
    X = _series_values(features, "features")
    Y = _series_values(targets, "targets")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"features/targets misaligned: {X.shape[0]} vs {Y.shape[0]} rows"
        )
    if X.shape[1] != params.arch.input_dim:
        raise ValueError(
            f"feature dim {X.shape[1]} does not match network input "
            f"{params.arch.input_dim}"
        )
    if Y.shape[1] != params.arch.target_dim:
        raise ValueError(
            f"target dim {Y.shape[1]} does not match network output "
            f"{params.arch.target_dim}"
        )
    return X, Y


def loss(params, features, targets, beta_kl: float = 1e-3,
         rng=None, mode: str = "infer") -> LossBreakdown:
    """Evaluate the loss over aligned feature/target rows."""
    if beta_kl < 0:
        raise ValueError("beta_kl must be >= 0")
    _require_rng(mode, rng)
    X, Y = _check_pair(params, features, targets)
    return _breakdown(_forward(params, X, Y, mode, rng), Y, beta_kl)


def _stack_backward(delta, x0, taus, weights, masks, keep):
    """Backprop through a tanh layer stack; returns (w grads, b grads,
    gradient w.r.t. the stack input)."""
    gw = [None] * len(weights)
    gb = [None] * len(weights)
    for j in range(len(weights) - 1, -1, -1):
        if masks is not None:
            delta = delta * masks[j] * (1.0 / keep)
        delta = delta * (1.0 - taus[j] * taus[j])
        inp = x0 if j == 0 else (
            taus[j - 1] if masks is None
            else taus[j - 1] * masks[j - 1] * (1.0 / keep)
        )
        gw[j] = inp.T @ delta
        gb[j] = delta.sum(axis=0)
        delta = delta @ weights[j].T
    return gw, gb, delta


def grad(params, features, targets, beta_kl: float = 1e-3,
         seed=0, mode: str = "train"):
    """Loss plus its exact analytic gradient.

    ``seed`` (an int or any SeedSequence entropy) fixes the dropout masks
    and eps draws; the returned breakdown is exactly the stochastic loss
    realized by that seed.
    """
    if beta_kl < 0:
        raise ValueError("beta_kl must be >= 0")
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    X, Y = _check_pair(params, features, targets)
    rng = np.random.default_rng(seed) if mode == "train" else None
    fwd = _forward(params, X, Y, mode, rng)
    breakdown = _breakdown(fwd, Y, beta_kl)

    R = X.shape[0]
    keep = fwd["keep"]
    dpred = 2.0 * (fwd["pred"] - Y) / fwd["pred"].size
    g_out_w = fwd["h_dec"].T @ dpred
    g_out_b = dpred.sum(axis=0)
    delta = dpred @ params.out_w.T
    g_dec_w, g_dec_b, dz = _stack_backward(
        delta, fwd["z"], fwd["dec_taus"], params.dec_w, fwd["dec_masks"], keep
    )

    dmu = dz + beta_kl * fwd["mu"] / R
    dlv = beta_kl * 0.5 * (np.exp(fwd["lv"]) - 1.0) / R
    if mode == "train":
        dlv = dlv + dz * fwd["eps"] * fwd["sigma"] * 0.5

    g_mu_w = fwd["h_enc"].T @ dmu
    g_mu_b = dmu.sum(axis=0)
    g_lv_w = fwd["h_enc"].T @ dlv
    g_lv_b = dlv.sum(axis=0)
    delta_enc = dmu @ params.mu_w.T + dlv @ params.lv_w.T
    g_enc_w, g_enc_b, _ = _stack_backward(
        delta_enc, X, fwd["enc_taus"], params.enc_w, fwd["enc_masks"], keep
    )

    grads = NetworkParams(
        params.arch, g_enc_w, g_enc_b, g_mu_w, g_mu_b, g_lv_w, g_lv_b,
        g_dec_w, g_dec_b, g_out_w, g_out_b,
    )
    return breakdown, grads
