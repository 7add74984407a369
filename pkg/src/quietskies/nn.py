"""Attention actor-critic over variable neighbor sets, in plain numpy float64.

Forward pass: the ownship features and each neighbor's features are embedded
by fully connected rectified-linear encoders (the neighbor encoder is shared).
A bilinear compatibility score between the ownship embedding and each neighbor
embedding feeds a softmax whose weights aggregate the neighbor embeddings into
a context vector; the context is projected through tanh, concatenated with the
ownship embedding, and passed through a shared trunk that splits into a
softmax policy head and a scalar value head. With zero neighbors the context
is the zero vector.

Gradients are hand-written reverse mode for the full PPO objective (clipped
surrogate + Huber value loss - entropy bonus), including the paths through the
attention weights. Neighbor rows are canonically sorted before batching so the
forward pass is exactly permutation invariant, bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import NEIGHBOR_DIM, OWNSHIP_DIM, Observation
from .errors import ConfigError
from .sim import N_ACTIONS

CHECKPOINT_FORMAT = "quietskies-params"
CHECKPOINT_VERSION = 1


class ShapeError(Exception):
    """An input array does not match the network's configured dimensions."""


class NonFiniteLoss(Exception):
    """Loss or gradients went non-finite; the caller should abort the update."""


@dataclass(frozen=True)
class NetDims:
    ownship: int = OWNSHIP_DIM
    neighbor: int = NEIGHBOR_DIM
    hidden: int = 256
    actions: int = N_ACTIONS


@dataclass(frozen=True)
class LossSpec:
    clip_eps: float = 0.4
    value_coeff: float = 0.01
    entropy_coeff: float = 0.01
    huber_delta: float = 1.0


@dataclass
class PolicyParameters:
    blocks: dict[str, np.ndarray]
    dims: NetDims
    seed: int
    iteration: int = 0

    def copy(self) -> "PolicyParameters":
        return PolicyParameters(
            blocks={k: v.copy() for k, v in self.blocks.items()},
            dims=self.dims,
            seed=self.seed,
            iteration=self.iteration,
        )


def _block_shapes(dims: NetDims) -> dict[str, tuple[int, ...]]:
    h = dims.hidden
    return {
        "w_own": (h, dims.ownship),
        "b_own": (h,),
        "w_nbr": (h, dims.neighbor),
        "b_nbr": (h,),
        "w_att": (h, h),
        "w_ctx": (h, h),
        "w_trunk": (h, 2 * h),
        "b_trunk": (h,),
        "w_pi": (dims.actions, h),
        "b_pi": (dims.actions,),
        "w_val": (1, h),
        "b_val": (1,),
    }


def init_params(seed: int, dims: NetDims | None = None) -> PolicyParameters:
    """Variance-scaled random weights, zero biases; deterministic per seed."""
    dims = dims or NetDims()
    if dims.ownship != OWNSHIP_DIM or dims.neighbor != NEIGHBOR_DIM:
        raise ConfigError(
            f"dims ({dims.ownship}, {dims.neighbor}) do not match the observation "
            f"feature widths ({OWNSHIP_DIM}, {NEIGHBOR_DIM})"
        )
    if dims.actions != N_ACTIONS:
        raise ConfigError(f"dims.actions {dims.actions} != action space size {N_ACTIONS}")
    rng = np.random.default_rng(seed)
    blocks: dict[str, np.ndarray] = {}
    for name, shape in _block_shapes(dims).items():
        if name.startswith("b_"):
            blocks[name] = np.zeros(shape)
        else:
            fan_in = shape[-1]
            # sqrt(2/fan_in) ahead of rectified-linear units, sqrt(1/fan_in) elsewhere
            gain = 2.0 if name in ("w_own", "w_nbr", "w_trunk") else 1.0
            blocks[name] = rng.normal(0.0, np.sqrt(gain / fan_in), size=shape)
    return PolicyParameters(blocks=blocks, dims=dims, seed=seed)


# ---------------------------------------------------------------------------
# observation batching


def sort_neighbors(neighbors: np.ndarray) -> np.ndarray:
    """Canonical lexicographic row order; makes aggregation order-independent."""
    if neighbors.shape[0] <= 1:
        return neighbors
    order = np.lexsort(tuple(neighbors[:, k] for k in range(neighbors.shape[1] - 1, -1, -1)))
    return neighbors[order]


def pack_observations(
    observations: list[Observation],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack observations into (own, neighbors, mask) with padding.

    neighbors is (B, M, NEIGHBOR_DIM) padded with zeros; mask is (B, M) with
    1.0 on real rows. M is the batch's max neighbor count (at least 1 so the
    arrays keep fixed rank even when nobody has neighbors).
    """
    b = len(observations)
    own = np.stack([o.ownship for o in observations]).astype(np.float64)
    m = max(1, max(o.neighbors.shape[0] for o in observations))
    nbr = np.zeros((b, m, NEIGHBOR_DIM))
    mask = np.zeros((b, m))
    for i, o in enumerate(observations):
        k = o.neighbors.shape[0]
        if k:
            nbr[i, :k] = sort_neighbors(np.asarray(o.neighbors, dtype=np.float64))
            mask[i, :k] = 1.0
    return own, nbr, mask


# ---------------------------------------------------------------------------
# forward / backward


def _check_shapes(params: PolicyParameters, own: np.ndarray, nbr: np.ndarray, mask: np.ndarray):
    d = params.dims
    if own.ndim != 2 or own.shape[1] != d.ownship:
        raise ShapeError(f"ownship batch {own.shape}, expected (B, {d.ownship})")
    if nbr.ndim != 3 or nbr.shape[2] != d.neighbor:
        raise ShapeError(f"neighbor batch {nbr.shape}, expected (B, M, {d.neighbor})")
    if mask.shape != nbr.shape[:2] or own.shape[0] != nbr.shape[0]:
        raise ShapeError(f"mask {mask.shape} inconsistent with neighbors {nbr.shape}")


def forward_batch(
    params: PolicyParameters, own: np.ndarray, nbr: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Batched forward pass. Returns (action_probs (B,A), values (B,), cache)."""
    _check_shapes(params, own, nbr, mask)
    p = params.blocks
    s_pre = own @ p["w_own"].T + p["b_own"]  # (B,H)
    s = np.maximum(s_pre, 0.0)
    n_pre = nbr @ p["w_nbr"].T + p["b_nbr"]  # (B,M,H)
    nb = np.maximum(n_pre, 0.0) * mask[:, :, None]
    sw = s @ p["w_att"]  # (B,H)
    scores = np.einsum("bh,bmh->bm", sw, nb)
    scores = np.where(mask > 0, scores, -np.inf)
    row_max = np.max(scores, axis=1)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)  # rows with no neighbors
    ex = np.exp(scores - row_max[:, None])  # exp(-inf) == 0 on padding
    denom = ex.sum(axis=1)
    alpha = ex / np.where(denom > 0, denom, 1.0)[:, None]
    c = np.einsum("bm,bmh->bh", alpha, nb)  # zero vector when no neighbors
    hstar = np.tanh(c @ p["w_ctx"].T)
    u = np.concatenate([s, hstar], axis=1)  # (B,2H)
    g_pre = u @ p["w_trunk"].T + p["b_trunk"]
    g = np.maximum(g_pre, 0.0)
    logits = g @ p["w_pi"].T + p["b_pi"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    z = e.sum(axis=1, keepdims=True)
    probs = e / z
    log_probs = shifted - np.log(z)
    values = (g @ p["w_val"].T + p["b_val"])[:, 0]
    cache = dict(
        own=own, nbr=nbr, mask=mask, s_pre=s_pre, s=s, n_pre=n_pre, nb=nb, sw=sw,
        alpha=alpha, c=c, hstar=hstar, u=u, g_pre=g_pre, g=g,
        probs=probs, log_probs=log_probs, values=values,
    )
    return probs, values, cache


def forward(params: PolicyParameters, observation: Observation) -> tuple[np.ndarray, float]:
    """Single-observation forward: (action_probs (A,), value)."""
    own, nbr, mask = pack_observations([observation])
    probs, values, _ = forward_batch(params, own, nbr, mask)
    return probs[0], float(values[0])


def backward_batch(
    params: PolicyParameters, cache: dict, dlogits: np.ndarray, dvalues: np.ndarray
) -> dict[str, np.ndarray]:
    """Reverse-mode gradients for every parameter block.

    dlogits (B,A) and dvalues (B,) are the loss gradients at the head outputs.
    """
    p = params.blocks
    own, nbr, mask = cache["own"], cache["nbr"], cache["mask"]
    s_pre, s, n_pre, nb = cache["s_pre"], cache["s"], cache["n_pre"], cache["nb"]
    alpha, c, hstar, u = cache["alpha"], cache["c"], cache["hstar"], cache["u"]
    g_pre, g = cache["g_pre"], cache["g"]
    h = params.dims.hidden

    grads: dict[str, np.ndarray] = {}
    grads["w_pi"] = dlogits.T @ g
    grads["b_pi"] = dlogits.sum(axis=0)
    grads["w_val"] = (dvalues @ g)[None, :]
    grads["b_val"] = np.array([dvalues.sum()])

    dg = dlogits @ p["w_pi"] + dvalues[:, None] * p["w_val"][0][None, :]
    dg_pre = dg * (g_pre > 0)
    grads["w_trunk"] = dg_pre.T @ u
    grads["b_trunk"] = dg_pre.sum(axis=0)

    du = dg_pre @ p["w_trunk"]  # (B,2H)
    ds = du[:, :h].copy()
    dhstar = du[:, h:]
    dt_pre = dhstar * (1.0 - hstar**2)
    grads["w_ctx"] = dt_pre.T @ c
    dc = dt_pre @ p["w_ctx"]  # (B,H)

    # attention: c = sum_m alpha_m nb_m with alpha = softmax(s W nb_m)
    dalpha = np.einsum("bh,bmh->bm", dc, nb)
    dnb = alpha[:, :, None] * dc[:, None, :]
    wsum = (alpha * dalpha).sum(axis=1, keepdims=True)
    dscores = alpha * (dalpha - wsum)  # softmax backward; zero on padding
    sw = cache["sw"]
    dnb = dnb + dscores[:, :, None] * sw[:, None, :]
    ds = ds + np.einsum("bm,bmh->bh", dscores, nb @ p["w_att"].T)
    grads["w_att"] = np.einsum("bm,bh,bmk->hk", dscores, s, nb)

    dn_pre = dnb * (n_pre > 0) * mask[:, :, None]
    grads["w_nbr"] = np.einsum("bmh,bmd->hd", dn_pre, nbr)
    grads["b_nbr"] = dn_pre.sum(axis=(0, 1))

    ds_pre = ds * (s_pre > 0)
    grads["w_own"] = ds_pre.T @ own
    grads["b_own"] = ds_pre.sum(axis=0)
    return grads


# ---------------------------------------------------------------------------
# PPO objective


def ppo_loss_forward(
    params: PolicyParameters, batch: dict, spec: LossSpec
) -> tuple[float, dict]:
    """Scalar PPO loss (minimized) on a batch; returns (loss, cache-with-terms).

    batch keys: own, nbr, mask, actions, advantages, returns, old_log_probs.
    """
    probs, values, cache = forward_batch(params, batch["own"], batch["nbr"], batch["mask"])
    b = probs.shape[0]
    idx = np.arange(b)
    actions = batch["actions"].astype(int)
    logp_a = cache["log_probs"][idx, actions]
    psi = np.exp(logp_a - batch["old_log_probs"])
    adv = batch["advantages"]
    unclipped = psi * adv
    clipped = np.clip(psi, 1.0 - spec.clip_eps, 1.0 + spec.clip_eps) * adv
    l_clip = np.minimum(unclipped, clipped)
    verr = values - batch["returns"]
    d = spec.huber_delta
    huber = np.where(np.abs(verr) <= d, 0.5 * verr**2, d * (np.abs(verr) - 0.5 * d))
    plogp = np.where(probs > 0, probs * cache["log_probs"], 0.0)
    entropy = -plogp.sum(axis=1)
    loss = float(-l_clip.mean() + spec.value_coeff * huber.mean() - spec.entropy_coeff * entropy.mean())
    cache.update(
        psi=psi, unclipped=unclipped, clipped=clipped, verr=verr, entropy=entropy,
        logp_a=logp_a, actions=actions, advantages=adv,
    )
    return loss, cache


def gradients(
    params: PolicyParameters, batch: dict, spec: LossSpec
) -> tuple[float, dict[str, np.ndarray], dict]:
    """Exact gradients of the PPO loss for every parameter block.

    The clipped term follows the min/clip subgradient convention: zero where
    the clipped branch is selected and the clip is active. Raises
    NonFiniteLoss on divergence. Also returns diagnostics (entropy, clip
    fraction, approximate KL).
    """
    loss, cache = ppo_loss_forward(params, batch, spec)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss = {loss}")
    b = cache["probs"].shape[0]
    probs, log_probs = cache["probs"], cache["log_probs"]
    actions, psi, adv = cache["actions"], cache["psi"], cache["advantages"]

    # -L_CLIP: gradient flows through psi only where min selects the unclipped branch
    pass_through = cache["unclipped"] <= cache["clipped"]
    coef = np.where(pass_through, psi * adv, 0.0)
    one_hot = np.zeros_like(probs)
    one_hot[np.arange(b), actions] = 1.0
    dlogits = (-coef / b)[:, None] * (one_hot - probs)

    # -entropy_coeff * H
    safe_logp = np.where(probs > 0, log_probs, 0.0)
    dlogits = dlogits + (spec.entropy_coeff / b) * probs * (safe_logp + cache["entropy"][:, None])

    # value_coeff * Huber
    d = spec.huber_delta
    dvalues = (spec.value_coeff / b) * np.clip(cache["verr"], -d, d)

    grads = backward_batch(params, cache, dlogits, dvalues)
    for name, gval in grads.items():
        if not np.all(np.isfinite(gval)):
            raise NonFiniteLoss(f"non-finite gradient in block {name}")
    diagnostics = {
        "entropy": float(cache["entropy"].mean()),
        "clip_fraction": float(np.mean(np.abs(psi - 1.0) > spec.clip_eps)),
        "approx_kl": float(np.mean(batch["old_log_probs"] - cache["logp_a"])),
    }
    return loss, grads, diagnostics


# ---------------------------------------------------------------------------
# action selection


def sample_action(action_probs: np.ndarray, rng: np.random.Generator) -> int:
    """Categorical draw from a probability simplex point."""
    p = np.asarray(action_probs, dtype=np.float64)
    if p.ndim != 1 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"not a probability vector: {p}")
    cum = np.cumsum(p)
    cum[-1] = 1.0  # guard the tail against rounding
    return int(np.searchsorted(cum, rng.random(), side="right"))


def greedy_action(action_probs: np.ndarray) -> int:
    return int(np.argmax(action_probs))


class NeuralPolicy:
    """Policy adapter over a parameter set for the rollout loop."""

    def __init__(self, params: PolicyParameters):
        self.params = params

    def act(
        self, observations: list[Observation], rng: np.random.Generator, greedy: bool = False
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        own, nbr, mask = pack_observations(observations)
        probs, values, cache = forward_batch(self.params, own, nbr, mask)
        n = len(observations)
        if greedy:
            actions = np.argmax(probs, axis=1)
        else:
            actions = np.array([sample_action(probs[i], rng) for i in range(n)])
        logps = cache["log_probs"][np.arange(n), actions]
        return actions.astype(np.int64), logps, values


# ---------------------------------------------------------------------------
# checkpoint container


def save_params(params: PolicyParameters, path: str | Path) -> None:
    """Shape-tagged 64-bit parameter container with a JSON metadata header."""
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dims": {
            "ownship": params.dims.ownship,
            "neighbor": params.dims.neighbor,
            "hidden": params.dims.hidden,
            "actions": params.dims.actions,
        },
        "seed": params.seed,
        "iteration": params.iteration,
    }
    arrays = {f"block/{k}": v.astype(np.float64) for k, v in params.blocks.items()}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_params(path: str | Path) -> PolicyParameters:
    with np.load(path) as data:
        if "__meta__" not in data:
            raise ConfigError(f"{path} is not a parameter checkpoint")
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ConfigError(f"{path}: unknown checkpoint format {meta.get('format')!r}")
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ConfigError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        dims = NetDims(**meta["dims"])
        blocks = {k[len("block/"):]: data[k].astype(np.float64) for k in data.files if k.startswith("block/")}
    expected = _block_shapes(dims)
    if set(blocks) != set(expected):
        raise ConfigError(f"{path}: parameter blocks {sorted(blocks)} != expected {sorted(expected)}")
    for name, shape in expected.items():
        if blocks[name].shape != shape:
            raise ConfigError(f"{path}: block {name} shape {blocks[name].shape} != {shape}")
    return PolicyParameters(blocks=blocks, dims=dims, seed=int(meta["seed"]), iteration=int(meta["iteration"]))
