"""Dense multilayer perceptron trained with ADAM.

Weights initialize from an injected entropy source (uniform over the
configured bounds, drawn layer by layer in row-major order) and the
per-epoch shuffle continues the same source's stream, so one seed fully
determines a training run. Biases start at zero on purpose: randomizing
them would blur the weight-provenance comparison this package exists
to make.

Hidden activation is ReLU; an "identity" activation exists as a test
hook because linear networks make finite-difference gradient checks
exact to float precision.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from randlab.datasets import shuffled_indices
from randlab.errors import EmptyDataset, InvalidConfig, NonFiniteLoss, WidthMismatch


@dataclass(frozen=True)
class MLPConfig:
    """Architecture plus optimizer settings.

    layer_sizes runs input, hidden..., output; at least one hidden
    layer. ADAM defaults are the optimizer's canonical constants.
    """

    layer_sizes: tuple
    epochs: int = 10
    batch_size: int = 32
    adam_alpha: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    init_lo: float = -0.5
    init_hi: float = 0.5
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(self.layer_sizes))
        if len(self.layer_sizes) < 3:
            raise InvalidConfig("need input, at least one hidden, and output")
        if any(s < 1 for s in self.layer_sizes):
            raise InvalidConfig("every layer needs at least one unit")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfig("epochs and batch_size must be >= 1")
        if not self.init_lo < self.init_hi:
            raise InvalidConfig("init bounds must satisfy lo < hi")
        if not (0.0 < self.adam_beta1 < 1.0 and 0.0 < self.adam_beta2 < 1.0):
            raise InvalidConfig("adam betas must lie in (0, 1)")
        if self.activation not in ("relu", "identity"):
            raise InvalidConfig(f"unknown activation {self.activation!r}")

    def config_hash(self):
        canonical = repr(
            (
                self.layer_sizes,
                self.epochs,
                self.batch_size,
                self.adam_alpha,
                self.adam_beta1,
                self.adam_beta2,
                self.adam_epsilon,
                self.init_lo,
                self.init_hi,
                self.activation,
            )
        )
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]


@dataclass
class MLPModel:
    weights: list
    biases: list
    adam_m_w: list
    adam_v_w: list
    adam_m_b: list
    adam_v_b: list
    step_count: int
    config: MLPConfig

    @property
    def input_size(self):
        return self.weights[0].shape[1]

    def parameter_count(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


@dataclass
class TrainingHistory:
    """Per-epoch test accuracy and mean training loss for one run.

    initial_accuracy is the untrained model's test accuracy (the
    "epoch 0" point); failed flags a run aborted by divergence, whose
    lists then stop at the last completed epoch.
    """

    accuracies: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    source_kind: str = ""
    seed: int = 0
    initial_accuracy: float | None = None
    failed: bool = False
    config_hash: str = ""


def init_model(config, source):
    """Draw every weight as next_bounded(lo, hi), layer by layer, each
    matrix in row-major order; biases and moments start at zero."""
    weights = []
    biases = []
    for fan_in, fan_out in zip(config.layer_sizes, config.layer_sizes[1:]):
        flat = np.array(
            [
                source.next_bounded(config.init_lo, config.init_hi)
                for _ in range(fan_out * fan_in)
            ],
            dtype=np.float64,
        )
        weights.append(flat.reshape(fan_out, fan_in))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return MLPModel(
        weights=weights,
        biases=biases,
        adam_m_w=[np.zeros_like(w) for w in weights],
        adam_v_w=[np.zeros_like(w) for w in weights],
        adam_m_b=[np.zeros_like(b) for b in biases],
        adam_v_b=[np.zeros_like(b) for b in biases],
        step_count=0,
        config=config,
    )


def _activate(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    return z


def _activate_grad(z, activation):
    if activation == "relu":
        return (z > 0.0).astype(np.float64)
    return np.ones_like(z)


def _forward_batch(model, batch):
    """Returns (pre-activations per layer, activations per layer,
    class probabilities). Activations[0] is the input batch."""
    activation = model.config.activation
    activations = [batch]
    pre_activations = []
    current = batch
    last = len(model.weights) - 1
    # divergent runs overflow here and produce nan probabilities; the
    # finite-loss check catches that, so don't warn along the way
    with np.errstate(over="ignore", invalid="ignore"):
        for index, (w, b) in enumerate(zip(model.weights, model.biases)):
            z = current @ w.T + b
            pre_activations.append(z)
            current = z if index == last else _activate(z, activation)
            activations.append(current)
        logits = pre_activations[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probabilities = exp / exp.sum(axis=1, keepdims=True)
    return pre_activations, activations, probabilities


def forward(model, row):
    """Class probabilities for a single row."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or len(row) != model.input_size:
        raise WidthMismatch(
            f"row has {row.size} features, model expects {model.input_size}"
        )
    _, _, probabilities = _forward_batch(model, row[None, :])
    return probabilities[0]


def _mean_loss(logits, labels):
    with np.errstate(invalid="ignore"):
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        true_logit = shifted[np.arange(len(labels)), labels]
        return float((log_norm - true_logit).mean())


def _backward(model, batch, labels):
    """Mean cross-entropy gradients for one batch."""
    pre_activations, activations, probabilities = _forward_batch(model, batch)
    n = len(batch)
    delta = probabilities.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = delta.T @ activations[layer]
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer]) * _activate_grad(
                pre_activations[layer - 1], model.config.activation
            )
    return grads_w, grads_b


def _adam_step(model, grads_w, grads_b):
    config = model.config
    model.step_count += 1
    t = model.step_count
    correction1 = 1.0 - config.adam_beta1**t
    correction2 = 1.0 - config.adam_beta2**t
    for layer in range(len(model.weights)):
        for params, grad, m, v in (
            (model.weights[layer], grads_w[layer], model.adam_m_w[layer],
             model.adam_v_w[layer]),
            (model.biases[layer], grads_b[layer], model.adam_m_b[layer],
             model.adam_v_b[layer]),
        ):
            m *= config.adam_beta1
            m += (1.0 - config.adam_beta1) * grad
            v *= config.adam_beta2
            v += (1.0 - config.adam_beta2) * grad * grad
            m_hat = m / correction1
            v_hat = v / correction2
            params -= config.adam_alpha * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)


def train_epoch(model, train, config, source):
    """One pass over the data: fresh shuffle from the source, then ADAM
    on consecutive mini-batches. Returns the mean sample loss."""
    if train.n_rows == 0:
        raise EmptyDataset("cannot train on zero rows")
    order = shuffled_indices(train.n_rows, source)
    total_loss = 0.0
    for start in range(0, train.n_rows, config.batch_size):
        chosen = order[start : start + config.batch_size]
        batch = train.features[chosen]
        labels = train.labels[chosen]
        pre_activations, _, _ = _forward_batch(model, batch)
        batch_loss = _mean_loss(pre_activations[-1], labels)
        if not math.isfinite(batch_loss):
            raise NonFiniteLoss(f"loss diverged to {batch_loss} at step {model.step_count}")
        total_loss += batch_loss * len(chosen)
        grads_w, grads_b = _backward(model, batch, labels)
        _adam_step(model, grads_w, grads_b)
        if not all(np.isfinite(w).all() for w in model.weights):
            raise NonFiniteLoss(f"parameters diverged at step {model.step_count}")
    return total_loss / train.n_rows


def evaluate_accuracy(model, test):
    """Fraction of rows whose argmax probability matches the label;
    argmax ties resolve to the lowest class index."""
    if test.n_rows == 0:
        raise EmptyDataset("cannot evaluate on zero rows")
    if test.features.shape[1] != model.input_size:
        raise WidthMismatch(
            f"test rows have {test.features.shape[1]} features, "
            f"model expects {model.input_size}"
        )
    _, _, probabilities = _forward_batch(model, test.features)
    return float((probabilities.argmax(axis=1) == test.labels).mean())


def mean_loss_of(model, features, labels):
    """Mean cross-entropy of a batch under the current parameters."""
    pre_activations, _, _ = _forward_batch(model, features)
    return _mean_loss(pre_activations[-1], labels)


def gradient_check(model, batch):
    """Max relative disagreement between backprop and central
    differences (step 1e-5) over unexcluded parameters.

    A ReLU unit whose pre-activation sits within 1e-4 of zero for any
    batch row makes finite differences step across the kink; gradients
    of the parameters feeding that unit, and of every parameter in
    layers upstream of a kink-adjacent layer, are excluded. An empty
    batch checks nothing and scores 0.
    """
    features, labels = batch
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(features) == 0:
        return 0.0

    step = 1e-5
    grads_w, grads_b = _backward(model, features, labels)
    pre_activations, _, _ = _forward_batch(model, features)

    hidden_count = len(model.weights) - 1
    if model.config.activation == "relu":
        kinked = [
            np.abs(pre_activations[layer]).min(axis=0) <= 1e-4
            for layer in range(hidden_count)
        ]
    else:
        kinked = [
            np.zeros(model.weights[layer].shape[0], dtype=bool)
            for layer in range(hidden_count)
        ]
    layer_tainted = [
        any(kinked[later].any() for later in range(layer + 1, hidden_count))
        for layer in range(len(model.weights))
    ]

    worst = 0.0
    for layer in range(len(model.weights)):
        if layer_tainted[layer]:
            continue
        if layer < hidden_count:
            unit_excluded = kinked[layer]
        else:
            unit_excluded = np.zeros(model.weights[layer].shape[0], dtype=bool)
        for params, grads in (
            (model.weights[layer], grads_w[layer]),
            (model.biases[layer], grads_b[layer]),
        ):
            flat = params.reshape(-1)
            grad_flat = grads.reshape(-1)
            for index in range(flat.size):
                unit = index // params.shape[1] if params.ndim == 2 else index
                if unit_excluded[unit]:
                    continue
                saved = flat[index]
                flat[index] = saved + step
                up = mean_loss_of(model, features, labels)
                flat[index] = saved - step
                down = mean_loss_of(model, features, labels)
                flat[index] = saved
                numeric = (up - down) / (2.0 * step)
                analytic = grad_flat[index]
                scale = max(abs(numeric) + abs(analytic), 1e-8)
                worst = max(worst, abs(numeric - analytic) / scale)
    return worst


def train_model(config, train, test, source, source_kind="", seed=0):
    """Initialize and train to completion, logging per-epoch test
    accuracy and mean loss. Divergence marks the history failed instead
    of raising."""
    model = init_model(config, source)
    history = TrainingHistory(
        source_kind=source_kind,
        seed=seed,
        initial_accuracy=evaluate_accuracy(model, test),
        config_hash=config.config_hash(),
    )
    for _ in range(config.epochs):
        try:
            loss = train_epoch(model, train, config, source)
        except NonFiniteLoss:
            history.failed = True
            break
        history.losses.append(loss)
        history.accuracies.append(evaluate_accuracy(model, test))
    return model, history


def save_history_csv(history, path, comment=None):
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(
            f"# config={history.config_hash} kind={history.source_kind} "
            f"seed={history.seed}\n"
        )
        if history.initial_accuracy is not None:
            fh.write(f"# initial_accuracy={history.initial_accuracy!r}\n")
        if history.failed:
            fh.write("# failed=true\n")
        fh.write("epoch,accuracy,loss\n")
        for epoch, (accuracy, loss) in enumerate(
            zip(history.accuracies, history.losses), start=1
        ):
            fh.write(f"{epoch},{accuracy!r},{loss!r}\n")
