"""A small self-attention network, written from scratch in numpy, for the
synthetic cross-modal retrieval task.

The model embeds frame/sound/query tokens, runs a stack of residual
attention + tanh-MLP blocks, mean-pools, and classifies the event class.
Temporal information enters through one of four interchangeable
encodings: rotation of attention queries/keys by absolute timestamp
("rote"), rotation by token index ("rope-index"), learnable discrete time
tokens interleaved into the stream ("itt"), or nothing ("none").
Forward and backward passes are hand-written so gradients can be checked
against finite differences.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .rotary import RotaryTimeConfig, frequency_schedule, rotate_rows
from .timetokens import TimeTokenBudget, time_token_index
from .toydata import SyntheticSample

DEFAULT_EPOCHS = 120
DEFAULT_LR = 0.35
DEFAULT_BATCH = 64

KIND_EVENT, KIND_SOUND, KIND_QUERY, KIND_TIME = 0, 1, 2, 3
_KIND_TABLE = {
    KIND_EVENT: "emb_event",
    KIND_SOUND: "emb_sound",
    KIND_QUERY: "emb_query",
    KIND_TIME: "emb_time",
}
_QUERY_IDS = {"before": 0, "after": 1}


class TimeEncoding(str, enum.Enum):
    TIME_ROTARY = "rote"
    INDEX_ROTARY = "rope-index"
    TIME_TOKENS = "itt"
    NONE = "none"


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 32
    layers: int = 2
    heads: int = 4
    time_encoding: TimeEncoding = TimeEncoding.TIME_ROTARY
    K: int = 100
    seed: int = 0
    rotary_base: float = 100.0

    def __post_init__(self) -> None:
        if self.dim <= 0 or self.dim % (2 * self.heads) != 0:
            raise ValueError("dim must be a positive multiple of 2*heads")
        if self.layers < 0:
            raise ValueError("layers must be non-negative")
        if self.K < 2:
            raise ValueError("K must be at least 2")

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "layers": self.layers,
            "heads": self.heads,
            "time_encoding": self.time_encoding.value,
            "K": self.K,
            "seed": self.seed,
            "rotary_base": self.rotary_base,
        }


@dataclass
class EncodedBatch:
    """Token grids for a batch of structurally identical samples."""

    kinds: np.ndarray  # [S] token kind per position
    ids: np.ndarray  # [B, S] row into the kind's embedding table
    timestamps: np.ndarray  # [B, S] seconds
    labels: np.ndarray  # [B]
    modality_tokens: int  # frame tokens + sound token

    @property
    def seq_len(self) -> int:
        return self.kinds.shape[0]


def encode_batch(
    samples: list[SyntheticSample], time_encoding: TimeEncoding, K: int
) -> EncodedBatch:
    """Lay the samples out as token grids.

    Layout is [frames..., sound, query]; in time-token mode every modality
    token is followed by its discrete time token, doubling that part of
    the stream.  All samples in a batch must share the frame count.
    """
    frame_counts = {len(s.frame_events) for s in samples}
    if len(frame_counts) != 1:
        raise ValueError("all samples in a batch must have the same frame count")
    F = frame_counts.pop()
    B = len(samples)
    interleaved = time_encoding is TimeEncoding.TIME_TOKENS

    modality = F + 1
    seq = 2 * modality + 1 if interleaved else modality + 1
    kinds = np.empty(seq, dtype=np.int64)
    ids = np.empty((B, seq), dtype=np.int64)
    stamps = np.empty((B, seq), dtype=float)

    step = 2 if interleaved else 1
    for f in range(F):
        kinds[f * step] = KIND_EVENT
        if interleaved:
            kinds[f * step + 1] = KIND_TIME
    kinds[F * step] = KIND_SOUND
    if interleaved:
        kinds[F * step + 1] = KIND_TIME
    kinds[-1] = KIND_QUERY

    for b, sample in enumerate(samples):
        duration = sample.duration()
        budget = TimeTokenBudget(K=K, T=duration) if interleaved else None
        for f, (t, c) in enumerate(sample.frame_events):
            ids[b, f * step] = c
            stamps[b, f * step] = t
            if interleaved:
                ids[b, f * step + 1] = time_token_index(t, budget)
                stamps[b, f * step + 1] = t
        interval, sound_class = sample.sound
        mid = interval.midpoint()
        ids[b, F * step] = sound_class
        stamps[b, F * step] = mid
        if interleaved:
            ids[b, F * step + 1] = time_token_index(mid, budget)
            stamps[b, F * step + 1] = mid
        ids[b, -1] = _QUERY_IDS[sample.query]
        # The question is about the sound, so the query token carries the
        # sound's timestamp; rotary attention can then match it against
        # frame timestamps directly.
        stamps[b, -1] = mid

    labels = np.asarray([s.answer for s in samples], dtype=np.int64)
    return EncodedBatch(kinds, ids, stamps, labels, modality)


@dataclass
class TrainReport:
    config: dict
    epoch_losses: list[float]
    train_accuracy: float
    test_accuracy: float
    sequence_length: int
    modality_token_count: int

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "epoch_losses": self.epoch_losses,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "sequence_length": self.sequence_length,
            "modality_token_count": self.modality_token_count,
        }


class ToyAttentionModel:
    def __init__(self, config: ModelConfig, event_classes: int, sound_classes: int):
        self.config = config
        self.event_classes = event_classes
        d = config.dim
        # A narrow MLP is deliberate: it leaves enough room to gate the
        # attention output without handing the model a lookup table big
        # enough to memorize the training set.
        hidden = max(4, d // 2)
        rng = np.random.default_rng(config.seed)
        p: dict[str, np.ndarray] = {}
        p["emb_event"] = rng.normal(0.0, 0.5, (event_classes, d))
        p["emb_sound"] = rng.normal(0.0, 0.5, (sound_classes, d))
        p["emb_query"] = rng.normal(0.0, 0.5, (2, d))
        if config.time_encoding is TimeEncoding.TIME_TOKENS:
            p["emb_time"] = rng.normal(0.0, 0.5, (config.K, d))
        for layer in range(config.layers):
            for name in ("q", "k", "v", "o"):
                p[f"w_{name}{layer}"] = rng.normal(0.0, d**-0.5, (d, d))
            p[f"w_mlp1_{layer}"] = rng.normal(0.0, d**-0.5, (d, hidden))
            p[f"b_mlp1_{layer}"] = np.zeros(hidden)
            p[f"w_mlp2_{layer}"] = rng.normal(0.0, hidden**-0.5, (hidden, d))
            p[f"b_mlp2_{layer}"] = np.zeros(d)
        p["w_out"] = rng.normal(0.0, d**-0.5, (d, event_classes))
        p["b_out"] = np.zeros(event_classes)
        self.params = p
        head_dim = d // config.heads
        self._freqs = frequency_schedule(
            RotaryTimeConfig(dim=head_dim, base=config.rotary_base)
        )

    # -- forward ----------------------------------------------------------

    def _positions(self, batch: EncodedBatch) -> np.ndarray | None:
        mode = self.config.time_encoding
        if mode is TimeEncoding.TIME_ROTARY:
            return batch.timestamps[:, None, :]  # broadcast over heads
        if mode is TimeEncoding.INDEX_ROTARY or mode is TimeEncoding.TIME_TOKENS:
            # Time-token streams keep the ordinary index rotation of the
            # backbone; the discrete time tokens are what they add.
            return np.arange(batch.seq_len, dtype=float)[None, None, :]
        return None

    def _split_heads(self, x: np.ndarray) -> np.ndarray:
        B, S, d = x.shape
        H = self.config.heads
        return x.reshape(B, S, H, d // H).transpose(0, 2, 1, 3)

    def _merge_heads(self, x: np.ndarray) -> np.ndarray:
        B, H, S, hd = x.shape
        return x.transpose(0, 2, 1, 3).reshape(B, S, H * hd)

    def embed(self, batch: EncodedBatch) -> np.ndarray:
        B, S = batch.ids.shape
        X = np.empty((B, S, self.config.dim))
        for kind, table in _KIND_TABLE.items():
            mask = batch.kinds == kind
            if mask.any():
                X[:, mask] = self.params[table][batch.ids[:, mask]]
        return X

    def forward(self, batch: EncodedBatch) -> tuple[np.ndarray, dict]:
        p = self.params
        pos = self._positions(batch)
        X = self.embed(batch)
        scale = (self.config.dim // self.config.heads) ** -0.5
        layers = []
        for layer in range(self.config.layers):
            X_in = X
            Q = self._split_heads(X_in @ p[f"w_q{layer}"])
            K = self._split_heads(X_in @ p[f"w_k{layer}"])
            V = self._split_heads(X_in @ p[f"w_v{layer}"])
            if pos is not None:
                Q = rotate_rows(Q, pos, self._freqs)
                K = rotate_rows(K, pos, self._freqs)
            scores = Q @ K.transpose(0, 1, 3, 2) * scale
            scores -= scores.max(axis=-1, keepdims=True)
            A = np.exp(scores)
            A /= A.sum(axis=-1, keepdims=True)
            O = A @ V
            merged = self._merge_heads(O)
            X_mid = X_in + merged @ p[f"w_o{layer}"]
            Z = np.tanh(X_mid @ p[f"w_mlp1_{layer}"] + p[f"b_mlp1_{layer}"])
            X = X_mid + Z @ p[f"w_mlp2_{layer}"] + p[f"b_mlp2_{layer}"]
            layers.append(
                {"X_in": X_in, "Q": Q, "K": K, "V": V, "A": A, "merged": merged,
                 "X_mid": X_mid, "Z": Z}
            )
        readout = X.mean(axis=1)
        logits = readout @ p["w_out"] + p["b_out"]
        cache = {
            "batch": batch, "pos": pos, "readout": readout,
            "layers": layers, "scale": scale,
        }
        return logits, cache

    def logits(self, samples: list[SyntheticSample]) -> np.ndarray:
        batch = encode_batch(samples, self.config.time_encoding, self.config.K)
        return self.forward(batch)[0]

    # -- backward ---------------------------------------------------------

    def backward(self, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        p = self.params
        batch: EncodedBatch = cache["batch"]
        pos = cache["pos"]
        scale = cache["scale"]
        B, S = batch.ids.shape
        grads = {name: np.zeros_like(value) for name, value in p.items()}

        grads["w_out"] += cache["readout"].T @ dlogits
        grads["b_out"] += dlogits.sum(axis=0)
        dX = np.repeat((dlogits @ p["w_out"].T)[:, None, :] / S, S, axis=1)

        for layer in reversed(range(self.config.layers)):
            c = cache["layers"][layer]
            # MLP block: X = X_mid + tanh(X_mid W1 + b1) W2 + b2
            dZ = dX @ p[f"w_mlp2_{layer}"].T
            grads[f"w_mlp2_{layer}"] += c["Z"].reshape(-1, c["Z"].shape[-1]).T @ dX.reshape(-1, dX.shape[-1])
            grads[f"b_mlp2_{layer}"] += dX.sum(axis=(0, 1))
            dpre = dZ * (1.0 - c["Z"] ** 2)
            grads[f"w_mlp1_{layer}"] += c["X_mid"].reshape(-1, dX.shape[-1]).T @ dpre.reshape(-1, dpre.shape[-1])
            grads[f"b_mlp1_{layer}"] += dpre.sum(axis=(0, 1))
            dX_mid = dX + dpre @ p[f"w_mlp1_{layer}"].T

            # Attention block: X_mid = X_in + merge(A V) W_o
            grads[f"w_o{layer}"] += c["merged"].reshape(-1, dX.shape[-1]).T @ dX_mid.reshape(-1, dX.shape[-1])
            dO = self._split_heads(dX_mid @ p[f"w_o{layer}"].T)
            dA = dO @ c["V"].transpose(0, 1, 3, 2)
            dV = c["A"].transpose(0, 1, 3, 2) @ dO
            dscores = c["A"] * (dA - (dA * c["A"]).sum(axis=-1, keepdims=True))
            dQ = dscores @ c["K"] * scale
            dK = dscores.transpose(0, 1, 3, 2) @ c["Q"] * scale
            if pos is not None:
                # Rotation is orthonormal: its adjoint rotates the other way.
                dQ = rotate_rows(dQ, -pos, self._freqs)
                dK = rotate_rows(dK, -pos, self._freqs)
            dQm = self._merge_heads(dQ)
            dKm = self._merge_heads(dK)
            dVm = self._merge_heads(dV)
            X_in_flat = c["X_in"].reshape(-1, dX.shape[-1])
            grads[f"w_q{layer}"] += X_in_flat.T @ dQm.reshape(-1, dX.shape[-1])
            grads[f"w_k{layer}"] += X_in_flat.T @ dKm.reshape(-1, dX.shape[-1])
            grads[f"w_v{layer}"] += X_in_flat.T @ dVm.reshape(-1, dX.shape[-1])
            dX = (
                dX_mid
                + dQm @ p[f"w_q{layer}"].T
                + dKm @ p[f"w_k{layer}"].T
                + dVm @ p[f"w_v{layer}"].T
            )

        for kind, table in _KIND_TABLE.items():
            mask = batch.kinds == kind
            if mask.any() and table in grads:
                np.add.at(grads[table], batch.ids[:, mask], dX[:, mask])
        return grads

    def loss_and_grads(self, batch: EncodedBatch) -> tuple[float, dict[str, np.ndarray]]:
        logits, cache = self.forward(batch)
        loss, dlogits = softmax_cross_entropy(logits, batch.labels)
        return loss, self.backward(cache, dlogits)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    n = logits.shape[0]
    loss = float(-log_probs[np.arange(n), labels].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def _class_counts(*sample_sets: list[SyntheticSample]) -> tuple[int, int]:
    event_classes = 0
    sound_classes = 0
    for samples in sample_sets:
        for s in samples:
            event_classes = max(event_classes, 1 + max(c for _, c in s.frame_events), 1 + s.answer)
            sound_classes = max(sound_classes, 1 + s.sound[1])
    return event_classes, sound_classes


def accuracy(model: ToyAttentionModel, samples: list[SyntheticSample]) -> float:
    if not samples:
        return 0.0
    batch = encode_batch(samples, model.config.time_encoding, model.config.K)
    logits, _ = model.forward(batch)
    return float((logits.argmax(axis=1) == batch.labels).mean())


def train(
    config: ModelConfig,
    dataset: list[SyntheticSample],
    test_dataset: list[SyntheticSample] | None = None,
    *,
    epochs: int = DEFAULT_EPOCHS,
    lr: float = DEFAULT_LR,
    batch_size: int = DEFAULT_BATCH,
) -> TrainReport:
    """Minibatch SGD with seeded shuffling; deterministic given inputs.

    A non-finite loss aborts with an error rather than returning a report.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    test_dataset = test_dataset or []
    event_classes, sound_classes = _class_counts(dataset, test_dataset)
    model = ToyAttentionModel(config, event_classes, sound_classes)
    batch_all = encode_batch(dataset, config.time_encoding, config.K)

    rng = np.random.default_rng(config.seed + 1)
    n = len(dataset)
    losses: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            rows = order[start : start + batch_size]
            minibatch = EncodedBatch(
                kinds=batch_all.kinds,
                ids=batch_all.ids[rows],
                timestamps=batch_all.timestamps[rows],
                labels=batch_all.labels[rows],
                modality_tokens=batch_all.modality_tokens,
            )
            loss, grads = model.loss_and_grads(minibatch)
            if not np.isfinite(loss):
                raise RuntimeError(f"training diverged: loss={loss}")
            for name, grad in grads.items():
                model.params[name] -= lr * grad
            epoch_loss += loss * len(rows)
        losses.append(epoch_loss / n)

    return TrainReport(
        config=config.to_dict(),
        epoch_losses=losses,
        train_accuracy=accuracy(model, dataset),
        test_accuracy=accuracy(model, test_dataset),
        sequence_length=batch_all.seq_len,
        modality_token_count=batch_all.modality_tokens,
    )


def grad_check(
    config: ModelConfig,
    *,
    n_samples: int = 6,
    step: float = 1e-5,
) -> float:
    """Max relative disagreement between analytic and central-difference
    gradients over every parameter tensor, on a small seeded batch.

    Per tensor the errors are normalized by the largest gradient magnitude
    in that tensor, which keeps near-zero entries (for example unused time
    token rows) from inflating the ratio.
    """
    if config.dim > 16:
        raise ValueError("grad_check is meant for small dims (<= 16)")
    from .toydata import VARIABLE, make_dataset

    samples = make_dataset(
        n_samples, C=4, frame_rate_mode=VARIABLE, seed=20240 + config.seed,
        frames=3, sound_classes=3,
    )
    model = ToyAttentionModel(config, event_classes=4, sound_classes=3)
    batch = encode_batch(samples, config.time_encoding, config.K)

    _, analytic = model.loss_and_grads(batch)

    def loss_only() -> float:
        logits, _ = model.forward(batch)
        return softmax_cross_entropy(logits, batch.labels)[0]

    worst = 0.0
    for name, tensor in model.params.items():
        numeric = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        numeric_flat = numeric.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            hi = loss_only()
            flat[i] = original - step
            lo = loss_only()
            flat[i] = original
            numeric_flat[i] = (hi - lo) / (2.0 * step)
        denom = max(np.abs(analytic[name]).max(), np.abs(numeric).max(), 1e-6)
        worst = max(worst, float(np.abs(analytic[name] - numeric).max() / denom))
    return worst
