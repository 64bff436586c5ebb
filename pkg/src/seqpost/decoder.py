"""Label-smoothing targets and a toy multi-head linear softmax decoder.

The decoder has one independent linear head per future step and per axis
(verb, noun); each head maps a shared feature vector to class logits.
Training is plain minibatch gradient descent on the summed per-head
softmax cross-entropy, with targets that are either one-hot rows or the
smoothed mix of each row with the sequence-mean label distribution:

    y'_z = (y_z + mean_t y_t) / 2

Gradients are the analytic softmax cross-entropy gradients, which keeps the
whole optimizer checkable by finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ensemble import LogitsTensor
from .rng import CounterRng
from .vocab import ActionSequence

_LOG_FLOOR = 1e-12


def smooth_labels(onehots: np.ndarray) -> np.ndarray:
    """Average each one-hot row with the column mean of all rows.

    Rows stay valid distributions and keep their argmax; constant-class
    inputs are exact fixed points.
    """
    onehots = np.asarray(onehots, dtype=np.float64)
    if onehots.ndim != 2:
        raise ValueError("expected a 2-D (steps x classes) matrix")
    for z, row in enumerate(onehots):
        if not (np.count_nonzero(row == 1.0) == 1 and np.count_nonzero(row) == 1):
            raise ValueError(f"row {z} is not one-hot")
    mean = onehots.mean(axis=0)
    return (onehots + mean) / 2.0


def cross_entropy(pred: np.ndarray, target: np.ndarray) -> float:
    """-sum(target * ln(pred)) with pred floored at 1e-12 before the log."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {target.shape}")
    return float(-(target * np.log(np.maximum(pred, _LOG_FLOOR))).sum())


def _onehot_rows(ids: list[int], num_classes: int) -> np.ndarray:
    rows = np.zeros((len(ids), num_classes))
    rows[np.arange(len(ids)), ids] = 1.0
    return rows


@dataclass
class MultiHeadDecoder:
    """Per-step linear heads; weights have shape (Z, feature_dim, C)."""

    feature_dim: int
    verb_weights: np.ndarray  # (Z, D, C_verb)
    verb_biases: np.ndarray  # (Z, C_verb)
    noun_weights: np.ndarray  # (Z, D, C_noun)
    noun_biases: np.ndarray  # (Z, C_noun)

    @property
    def num_steps(self) -> int:
        return self.verb_weights.shape[0]

    @classmethod
    def init(
        cls, feature_dim: int, num_steps: int, c_verb: int, c_noun: int,
        seed: int = 0, init_scale: float = 0.01,
    ) -> "MultiHeadDecoder":
        rng = CounterRng(seed, stream=0xDEC0DE)
        def draw(shape):
            flat = np.array([rng.gauss() for _ in range(int(np.prod(shape)))])
            return init_scale * flat.reshape(shape)
        return cls(
            feature_dim=feature_dim,
            verb_weights=draw((num_steps, feature_dim, c_verb)),
            verb_biases=np.zeros((num_steps, c_verb)),
            noun_weights=draw((num_steps, feature_dim, c_noun)),
            noun_biases=np.zeros((num_steps, c_noun)),
        )

    def copy(self) -> "MultiHeadDecoder":
        return MultiHeadDecoder(
            feature_dim=self.feature_dim,
            verb_weights=self.verb_weights.copy(),
            verb_biases=self.verb_biases.copy(),
            noun_weights=self.noun_weights.copy(),
            noun_biases=self.noun_biases.copy(),
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "feature_dim": self.feature_dim,
                "num_steps": self.num_steps,
                "verb_weights": self.verb_weights.tolist(),
                "verb_biases": self.verb_biases.tolist(),
                "noun_weights": self.noun_weights.tolist(),
                "noun_biases": self.noun_biases.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MultiHeadDecoder":
        obj = json.loads(text)
        return cls(
            feature_dim=obj["feature_dim"],
            verb_weights=np.array(obj["verb_weights"], dtype=np.float64),
            verb_biases=np.array(obj["verb_biases"], dtype=np.float64),
            noun_weights=np.array(obj["noun_weights"], dtype=np.float64),
            noun_biases=np.array(obj["noun_biases"], dtype=np.float64),
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 8
    use_label_smoothing: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("learning_rate, epochs and batch_size must be positive")


def decoder_forward(dec: MultiHeadDecoder, features: np.ndarray) -> LogitsTensor:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (dec.feature_dim,):
        raise ValueError(
            f"feature vector has shape {features.shape}, expected ({dec.feature_dim},)"
        )
    return LogitsTensor(
        example_id="",
        verb_logits=np.einsum("zdc,d->zc", dec.verb_weights, features) + dec.verb_biases,
        noun_logits=np.einsum("zdc,d->zc", dec.noun_weights, features) + dec.noun_biases,
    )


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def example_targets(
    seq: ActionSequence, c_verb: int, c_noun: int, use_smoothing: bool
) -> tuple[np.ndarray, np.ndarray]:
    verb_onehots = _onehot_rows([a.verb_id for a in seq.actions], c_verb)
    noun_onehots = _onehot_rows([a.noun_id for a in seq.actions], c_noun)
    if use_smoothing:
        return smooth_labels(verb_onehots), smooth_labels(noun_onehots)
    return verb_onehots, noun_onehots


def loss_and_grad(
    dec: MultiHeadDecoder,
    batch: list[tuple[np.ndarray, ActionSequence]],
    use_smoothing: bool,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean over the batch of the per-example summed cross-entropy, plus
    analytic gradients in the same layout as the decoder parameters."""
    c_verb = dec.verb_weights.shape[2]
    c_noun = dec.noun_weights.shape[2]
    grads = {
        "verb_weights": np.zeros_like(dec.verb_weights),
        "verb_biases": np.zeros_like(dec.verb_biases),
        "noun_weights": np.zeros_like(dec.noun_weights),
        "noun_biases": np.zeros_like(dec.noun_biases),
    }
    total_loss = 0.0
    for features, seq in batch:
        features = np.asarray(features, dtype=np.float64)
        logits = decoder_forward(dec, features)
        verb_targets, noun_targets = example_targets(seq, c_verb, c_noun, use_smoothing)
        for probs, targets, w_key, b_key in (
            (_softmax_rows(logits.verb_logits), verb_targets, "verb_weights", "verb_biases"),
            (_softmax_rows(logits.noun_logits), noun_targets, "noun_weights", "noun_biases"),
        ):
            for z in range(dec.num_steps):
                total_loss += cross_entropy(probs[z], targets[z])
            delta = probs - targets  # (Z, C): d loss / d logits
            grads[w_key] += np.einsum("d,zc->zdc", features, delta)
            grads[b_key] += delta
    scale = 1.0 / len(batch)
    for key in grads:
        grads[key] *= scale
    return total_loss * scale, grads


def train(
    dec: MultiHeadDecoder,
    dataset: list[tuple[np.ndarray, ActionSequence]],
    cfg: TrainConfig,
) -> tuple[MultiHeadDecoder, list[float]]:
    """Seeded minibatch gradient descent; returns the trained decoder and the
    mean per-example loss for each epoch."""
    if not dataset:
        raise ValueError("empty dataset")
    for features, seq in dataset:
        features = np.asarray(features)
        if features.shape != (dec.feature_dim,):
            raise ValueError(
                f"episode {seq.episode_id!r}: feature vector has shape "
                f"{features.shape}, expected ({dec.feature_dim},)"
            )
        if len(seq.actions) != dec.num_steps:
            raise ValueError(
                f"episode {seq.episode_id!r}: sequence length {len(seq.actions)} "
                f"!= decoder steps {dec.num_steps}"
            )

    dec = dec.copy()
    rng = CounterRng(cfg.rng_seed, stream=0x7E41)
    order = list(range(len(dataset)))
    history: list[float] = []
    for _ in range(cfg.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [dataset[i] for i in order[start : start + cfg.batch_size]]
            loss, grads = loss_and_grad(dec, batch, cfg.use_label_smoothing)
            epoch_loss += loss * len(batch)
            dec.verb_weights -= cfg.learning_rate * grads["verb_weights"]
            dec.verb_biases -= cfg.learning_rate * grads["verb_biases"]
            dec.noun_weights -= cfg.learning_rate * grads["noun_weights"]
            dec.noun_biases -= cfg.learning_rate * grads["noun_biases"]
        history.append(epoch_loss / len(order))
    return dec, history


def load_train_dataset(path: str) -> list[tuple[np.ndarray, ActionSequence]]:
    """JSONL rows {"features": [...], "actions": [[v, n], ...]}."""
    from .vocab import Action, iter_jsonl

    dataset = []
    for lineno, obj in iter_jsonl(path):
        try:
            features = np.array(obj["features"], dtype=np.float64)
            actions = tuple(Action(int(v), int(n)) for v, n in obj["actions"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad training record: {exc}") from exc
        dataset.append((features, ActionSequence(episode_id=f"line{lineno}", actions=actions)))
    return dataset
