"""Two-level strided-convolution classifier compiled from simplicial families.

Per nonempty family (simplex size s, m simplices):
  gather -> B x m x s
  level 1: m independent windows, kernel = stride = s, zeta filters -> B x zeta x m
  level 2: kernel spanning all m positions over zeta channels, xi filters -> B x xi
  ReLU + inverted dropout follow both levels; the per-family xi-vectors are
  concatenated and fed to a linear head with one logit per class.

Everything is plain numpy with hand-written analytic gradients so the
finite-difference check can hold at double precision.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .homology import SimplicialFamilies
from .rng import STREAM_INIT, STREAM_TRAIN, make_rng, mix_seed

FAMILY_SIZES = {"tetrahedra": 4, "triangles": 3, "edges": 2}


@dataclass(frozen=True)
class HcnnConfig:
    zeta: int  # 1st-level filters
    xi: int    # 2nd-level filters
    n_classes: int
    dropout_rate: float = 0.25

    def __post_init__(self):
        if self.zeta < 1 or self.xi < 1:
            raise ValueError("filter counts must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 300
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience > self.max_epochs:
            raise ValueError("patience cannot exceed max_epochs")


@dataclass
class FamilyPath:
    """One per-family convolution path and its gather plan."""

    name: str
    simplex_size: int
    indices: np.ndarray       # flat, length m * simplex_size
    conv1_w: np.ndarray       # zeta x s
    conv1_b: np.ndarray       # zeta
    conv2_w: np.ndarray       # xi x zeta x m
    conv2_b: np.ndarray       # xi

    @property
    def m(self) -> int:
        return self.indices.size // self.simplex_size


@dataclass
class HcnnModel:
    families: SimplicialFamilies
    config: HcnnConfig
    paths: list[FamilyPath]
    head_w: np.ndarray  # C x (xi * F)
    head_b: np.ndarray  # C

    def parameters(self) -> list[np.ndarray]:
        arrays = []
        for path in self.paths:
            arrays.extend([path.conv1_w, path.conv1_b, path.conv2_w, path.conv2_b])
        arrays.extend([self.head_w, self.head_b])
        return arrays


def compile(families: SimplicialFamilies, config: HcnnConfig, seed: int = 0) -> HcnnModel:
    """Allocate and initialize the per-family paths and the linear head.

    Weights are fan-in-scaled uniform draws from the run PRNG; empty
    families get no path at all.
    """
    rng = make_rng(mix_seed(seed, STREAM_INIT))
    nonempty = families.nonempty()
    if not nonempty:
        raise ValueError("all simplicial families are empty (graph had only singletons)")

    def init(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    paths = []
    flat = {"tetrahedra": families.h_indices,
            "triangles": families.r_indices,
            "edges": families.e_indices}
    for name in nonempty:
        s = FAMILY_SIZES[name]
        indices = flat[name]
        m = indices.size // s
        paths.append(FamilyPath(
            name=name,
            simplex_size=s,
            indices=indices,
            conv1_w=init((config.zeta, s), s),
            conv1_b=init((config.zeta,), s),
            conv2_w=init((config.xi, config.zeta, m), config.zeta * m),
            conv2_b=init((config.xi,), config.zeta * m),
        ))
    head_in = config.xi * len(paths)
    head_w = init((config.n_classes, head_in), head_in)
    head_b = init((config.n_classes,), head_in)
    return HcnnModel(families=families, config=config, paths=paths,
                     head_w=head_w, head_b=head_b)


def param_count(model: HcnnModel) -> int:
    return sum(p.size for p in model.parameters())


def _forward_cached(model: HcnnModel, batch: np.ndarray, training: bool,
                    rng: np.random.Generator | None):
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ValueError("batch must be B x n")
    p = model.config.dropout_rate
    use_dropout = training and p > 0.0
    if use_dropout and rng is None:
        raise ValueError("training-mode forward needs an rng for dropout")
    keep = 1.0 - p
    caches = []
    pooled = []
    for path in model.paths:
        if path.indices.size and path.indices.max() >= batch.shape[1]:
            raise ValueError(
                f"family {path.name!r} references feature {int(path.indices.max())}, "
                f"batch has {batch.shape[1]} columns")
        x = batch[:, path.indices].reshape(batch.shape[0], path.m, path.simplex_size)
        z1 = np.einsum("bms,cs->bcm", x, path.conv1_w) + path.conv1_b[None, :, None]
        a1 = np.maximum(z1, 0.0)
        if use_dropout:
            mask1 = (rng.random(a1.shape) < keep) / keep
            a1 = a1 * mask1
        else:
            mask1 = None
        z2 = np.einsum("bcm,ocm->bo", a1, path.conv2_w) + path.conv2_b
        a2 = np.maximum(z2, 0.0)
        if use_dropout:
            mask2 = (rng.random(a2.shape) < keep) / keep
            a2 = a2 * mask2
        else:
            mask2 = None
        caches.append({"x": x, "z1": z1, "a1": a1, "mask1": mask1,
                       "z2": z2, "mask2": mask2})
        pooled.append(a2)
    hidden = np.concatenate(pooled, axis=1)
    logits = hidden @ model.head_w.T + model.head_b
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("non-finite activations in the linear head")
    return logits, hidden, caches


def forward(model: HcnnModel, batch: np.ndarray, training: bool = False,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Logits for a batch; dropout is active only when training=True."""
    logits, _, _ = _forward_cached(model, batch, training, rng)
    return logits


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def predict(model: HcnnModel, batch: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties resolve to the smallest class index."""
    return np.argmax(forward(model, batch), axis=1)


def loss_and_gradients(model: HcnnModel, batch: np.ndarray, labels: np.ndarray,
                       training: bool = False,
                       rng: np.random.Generator | None = None):
    """Mean softmax cross-entropy and exact gradients for every parameter.

    Gradients are returned in the order of model.parameters().
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0 or labels.max() >= model.config.n_classes:
        raise ValueError("labels must lie in [0, n_classes)")
    logits, hidden, caches = _forward_cached(model, batch, training, rng)
    B = logits.shape[0]
    probs = softmax(logits)
    loss = float(-np.mean(np.log(probs[np.arange(B), labels] + 1e-300)))

    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B

    grad_head_w = dlogits.T @ hidden
    grad_head_b = dlogits.sum(axis=0)
    dhidden = dlogits @ model.head_w

    grads: list[np.ndarray] = []
    xi = model.config.xi
    for k, (path, cache) in enumerate(zip(model.paths, caches)):
        da2 = dhidden[:, k * xi:(k + 1) * xi]
        if cache["mask2"] is not None:
            da2 = da2 * cache["mask2"]
        dz2 = da2 * (cache["z2"] > 0.0)
        grad_conv2_w = np.einsum("bo,bcm->ocm", dz2, cache["a1"])
        grad_conv2_b = dz2.sum(axis=0)
        da1 = np.einsum("bo,ocm->bcm", dz2, path.conv2_w)
        if cache["mask1"] is not None:
            da1 = da1 * cache["mask1"]
        dz1 = da1 * (cache["z1"] > 0.0)
        grad_conv1_w = np.einsum("bcm,bms->cs", dz1, cache["x"])
        grad_conv1_b = dz1.sum(axis=(0, 2))
        grads.extend([grad_conv1_w, grad_conv1_b, grad_conv2_w, grad_conv2_b])
    grads.extend([grad_head_w, grad_head_b])
    return loss, grads


class AdamState:
    """Adaptive moment estimation with bias correction (0.9 / 0.999 / 1e-8)."""

    def __init__(self, params: list[np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g ** 2
            m_hat = self.m[i] / (1 - self.beta1 ** self.t)
            v_hat = self.v[i] / (1 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


class DivergenceError(RuntimeError):
    def __init__(self, history):
        super().__init__("validation loss became non-finite")
        self.history = history


def evaluate_loss(model: HcnnModel, features: np.ndarray, labels: np.ndarray) -> float:
    logits = forward(model, features, training=False)
    probs = softmax(logits)
    return float(-np.mean(np.log(probs[np.arange(len(labels)), labels] + 1e-300)))


def _snapshot(model: HcnnModel) -> list[np.ndarray]:
    return [p.copy() for p in model.parameters()]


def _restore(model: HcnnModel, snapshot: list[np.ndarray]) -> None:
    for p, saved in zip(model.parameters(), snapshot):
        p[...] = saved


def train(model: HcnnModel, train_set, val_set, cfg: TrainConfig):
    """Mini-batch Adam with per-epoch validation and early stopping.

    `train_set` / `val_set` are (features, labels) pairs.  Returns the
    model restored to its best-validation-loss weights plus a history of
    per-epoch train/val losses.
    """
    train_x, train_y = train_set
    val_x, val_y = val_set
    if len(train_x) == 0 or len(val_x) == 0:
        raise ValueError("train and validation sets must be nonempty")
    rng = make_rng(mix_seed(cfg.seed, STREAM_TRAIN))
    params = model.parameters()
    adam = AdamState(params, cfg.learning_rate)

    history = {"train_loss": [], "val_loss": []}
    best_val = np.inf
    best_weights = _snapshot(model)
    epochs_since_best = 0
    for _ in range(cfg.max_epochs):
        order = rng.permutation(len(train_x))
        epoch_loss = 0.0
        batches = 0
        for start in range(0, len(order), cfg.batch_size):
            rows = order[start:start + cfg.batch_size]
            loss, grads = loss_and_gradients(model, train_x[rows], train_y[rows],
                                             training=True, rng=rng)
            adam.step(params, grads)
            epoch_loss += loss
            batches += 1
        val_loss = evaluate_loss(model, val_x, val_y)
        history["train_loss"].append(epoch_loss / batches)
        history["val_loss"].append(val_loss)
        if not np.isfinite(val_loss):
            raise DivergenceError(history)
        if val_loss < best_val:
            best_val = val_loss
            best_weights = _snapshot(model)
            epochs_since_best = 0
        else:
            epochs_since_best += 1
        if epochs_since_best >= cfg.patience:
            break
    _restore(model, best_weights)
    return model, history


def save_checkpoint(model: HcnnModel, path: str) -> None:
    """Self-describing npz blob: config, families, and all weight arrays."""
    meta = {
        "config": {"zeta": model.config.zeta, "xi": model.config.xi,
                   "n_classes": model.config.n_classes,
                   "dropout_rate": model.config.dropout_rate},
        "families": {
            "tetrahedra": [list(t) for t in model.families.tetrahedra],
            "triangles": [list(t) for t in model.families.triangles],
            "edges": [list(t) for t in model.families.edges],
            "singletons": list(model.families.singletons),
        },
        "paths": [p.name for p in model.paths],
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for path_obj in model.paths:
        for attr in ("conv1_w", "conv1_b", "conv2_w", "conv2_b"):
            arrays[f"{path_obj.name}.{attr}"] = getattr(path_obj, attr)
    arrays["head_w"] = model.head_w
    arrays["head_b"] = model.head_b
    with open(path, "wb") as handle:
        np.savez(handle, **arrays)


def load_checkpoint(path: str) -> HcnnModel:
    with np.load(path) as blob:
        meta = json.loads(bytes(blob["meta"]).decode())
        families = SimplicialFamilies(
            tetrahedra=[tuple(t) for t in meta["families"]["tetrahedra"]],
            triangles=[tuple(t) for t in meta["families"]["triangles"]],
            edges=[tuple(t) for t in meta["families"]["edges"]],
            singletons=list(meta["families"]["singletons"]),
        )
        config = HcnnConfig(**meta["config"])
        model = compile(families, config, seed=0)
        for path_obj in model.paths:
            for attr in ("conv1_w", "conv1_b", "conv2_w", "conv2_b"):
                getattr(path_obj, attr)[...] = blob[f"{path_obj.name}.{attr}"]
        model.head_w[...] = blob["head_w"]
        model.head_b[...] = blob["head_b"]
    return model
