"""GCN graph classifier: stacked graph convolutions, max pooling, MLP head.

Attackers only ever see this model through :class:`LabelOracle`, which
returns the predicted label and counts queries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .checkpoint import FORMAT_VERSION, decode_arrays, encode_arrays, read_document, write_document
from .errors import ConfigurationError, DomainError, InvalidInputError
from .graph import Graph
from .kernel import softmax
from .layers import gcn_numpy, gcn_stack, glorot, mlp, mlp_numpy, normalized_adjacency
from .optim import SGD


@dataclass
class ClassifierModel:
    layer_weights: list[np.ndarray]
    mlp_weights: list[np.ndarray]
    mlp_biases: list[np.ndarray]
    num_classes: int
    self_loops: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.layer_weights or not self.mlp_weights:
            raise InvalidInputError("classifier needs at least one GCN layer and one MLP layer")
        if len(self.mlp_weights) != len(self.mlp_biases):
            raise InvalidInputError("one bias vector per MLP layer")
        prev = self.layer_weights[0].shape[0]
        for w in self.layer_weights + self.mlp_weights:
            if w.ndim != 2 or w.shape[0] != prev:
                raise InvalidInputError(f"layer shape {w.shape} does not chain from width {prev}")
            prev = w.shape[1]
        for w, b in zip(self.mlp_weights, self.mlp_biases):
            if b.shape != (w.shape[1],):
                raise InvalidInputError(f"bias shape {b.shape} does not match layer {w.shape}")
        if prev != self.num_classes:
            raise InvalidInputError(f"MLP emits {prev} outputs for {self.num_classes} classes")

    @property
    def input_dim(self) -> int:
        return self.layer_weights[0].shape[0]

    @property
    def hidden_dims(self) -> list[int]:
        return [w.shape[1] for w in self.layer_weights]

    def params(self) -> dict[str, np.ndarray]:
        out = {f"gcn.{i}": w for i, w in enumerate(self.layer_weights)}
        for i, (w, b) in enumerate(zip(self.mlp_weights, self.mlp_biases)):
            out[f"mlp.w{i}"] = w
            out[f"mlp.b{i}"] = b
        return out

    def with_params(self, params: dict[str, np.ndarray]) -> "ClassifierModel":
        n_gcn, n_mlp = len(self.layer_weights), len(self.mlp_weights)
        return ClassifierModel(
            [np.asarray(params[f"gcn.{i}"]) for i in range(n_gcn)],
            [np.asarray(params[f"mlp.w{i}"]) for i in range(n_mlp)],
            [np.asarray(params[f"mlp.b{i}"]) for i in range(n_mlp)],
            self.num_classes,
            self.self_loops,
        )

    def save(self, path) -> None:
        write_document(path, {
            "version": FORMAT_VERSION,
            "kind": "classifier",
            "dims": {
                "input_dim": self.input_dim,
                "hidden_dims": self.hidden_dims,
                "mlp_dims": [w.shape[1] for w in self.mlp_weights],
                "num_classes": self.num_classes,
            },
            "config": {"self_loops": self.self_loops},
            "weights": encode_arrays(self.params()),
        })

    @classmethod
    def load(cls, path) -> "ClassifierModel":
        doc = read_document(path, "classifier")
        dims = doc["dims"]
        arrays = decode_arrays(doc["weights"])
        n_gcn, n_mlp = len(dims["hidden_dims"]), len(dims["mlp_dims"])
        try:
            model = cls(
                [arrays[f"gcn.{i}"] for i in range(n_gcn)],
                [arrays[f"mlp.w{i}"] for i in range(n_mlp)],
                [arrays[f"mlp.b{i}"] for i in range(n_mlp)],
                int(dims["num_classes"]),
                bool(doc["config"]["self_loops"]),
            )
        except (KeyError, InvalidInputError) as exc:
            raise ConfigurationError(f"{path}: inconsistent classifier checkpoint ({exc})") from exc
        if model.input_dim != dims["input_dim"] or model.hidden_dims != list(dims["hidden_dims"]):
            raise ConfigurationError(f"{path}: declared dims do not match weight shapes")
        return model


def init_classifier(input_dim: int, num_classes: int, rng: np.random.Generator,
                    hidden_dim: int = 32, num_layers: int = 3, mlp_hidden: int = 32,
                    self_loops: bool = False) -> ClassifierModel:
    dims = [input_dim] + [hidden_dim] * num_layers
    layers = [glorot(rng, dims[i], dims[i + 1]) for i in range(num_layers)]
    mlp_w = [glorot(rng, hidden_dim, mlp_hidden), glorot(rng, mlp_hidden, num_classes)]
    mlp_b = [np.zeros(mlp_hidden), np.zeros(num_classes)]
    return ClassifierModel(layers, mlp_w, mlp_b, num_classes, self_loops)


def _check_input(g: Graph, model: ClassifierModel) -> None:
    if g.feature_dim != model.input_dim:
        raise InvalidInputError(
            f"graph has {g.feature_dim}-dim features, model expects {model.input_dim}")
    if g.num_nodes == 0:
        raise InvalidInputError("cannot classify an empty graph")


def gcn_forward(g: Graph, model: ClassifierModel) -> np.ndarray:
    _check_input(g, model)
    return gcn_numpy(normalized_adjacency(g, model.self_loops), g.features, model.layer_weights)


def graph_embedding(f: np.ndarray) -> np.ndarray:
    """Column-wise max pooling of node embeddings."""
    f = np.asarray(f)
    if f.ndim != 2 or f.shape[0] == 0:
        raise InvalidInputError("max pooling needs at least one node")
    return f.max(axis=0)


@dataclass(frozen=True)
class Prediction:
    label: int
    logits: np.ndarray
    graph_embedding: np.ndarray


def predict(g: Graph, model: ClassifierModel) -> Prediction:
    u = graph_embedding(gcn_forward(g, model))
    p = softmax(mlp_numpy(u, model.mlp_weights, model.mlp_biases))
    return Prediction(int(np.argmax(p)), p, u)


def loss_var(g: Graph, label: int, params: dict[str, ad.Var], model: ClassifierModel) -> ad.Var:
    """Cross-entropy of one graph as an autodiff node over ``params``."""
    n_gcn, n_mlp = len(model.layer_weights), len(model.mlp_weights)
    f = gcn_stack(normalized_adjacency(g, model.self_loops), g.features,
                  [params[f"gcn.{i}"] for i in range(n_gcn)])
    u = ad.max_pool(f)
    scores = mlp(u, [params[f"mlp.w{i}"] for i in range(n_mlp)],
                 [params[f"mlp.b{i}"] for i in range(n_mlp)])
    return -ad.pick(ad.log_softmax(scores), label)


def loss_and_grad(graphs: list[Graph], labels, model: ClassifierModel):
    """Mean cross-entropy over ``graphs`` and its gradient w.r.t. every parameter."""
    params = {k: ad.param(v) for k, v in model.params().items()}
    losses = [loss_var(g, int(y), params, model) for g, y in zip(graphs, labels)]
    loss = ad.total(losses) * (1.0 / len(losses))
    loss.backward()
    grads = {k: (v.grad if v.grad is not None else np.zeros_like(v.value)) for k, v in params.items()}
    return float(loss.value), grads


@dataclass
class ClassifierHyper:
    hidden_dim: int = 32
    num_layers: int = 3
    mlp_hidden: int = 32
    lr: float = 0.01
    momentum: float = 0.9
    epochs: int = 200
    batch_size: int = 16
    self_loops: bool = False


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


@dataclass
class TrainResult:
    model: ClassifierModel
    trace: list[EpochStats] = field(default_factory=list)


def train_classifier(dataset: list[Graph], hyper: ClassifierHyper, rng: np.random.Generator,
                     num_classes: int | None = None) -> TrainResult:
    """Mini-batch gradient descent on cross-entropy.

    ``num_classes`` defaults to ``max label + 1``, in which case at least two
    distinct labels are required.
    """
    if not dataset:
        raise InvalidInputError("empty training set")
    if any(g.label is None for g in dataset):
        raise InvalidInputError("every training graph needs a label")
    labels = np.array([g.label for g in dataset])
    if num_classes is None:
        if len(set(labels.tolist())) < 2:
            raise InvalidInputError("training set contains a single class")
        num_classes = int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= num_classes:
        raise InvalidInputError("label out of range")
    widths = {g.feature_dim for g in dataset}
    if len(widths) != 1:
        raise InvalidInputError(f"graphs disagree on feature width: {sorted(widths)}")

    model = init_classifier(widths.pop(), num_classes, rng, hyper.hidden_dim, hyper.num_layers,
                            hyper.mlp_hidden, hyper.self_loops)
    opt = SGD(hyper.lr, hyper.momentum)
    trace = []
    n = len(dataset)
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            loss, grads = loss_and_grad([dataset[i] for i in idx], labels[idx], model)
            total += loss * len(idx)
            model = model.with_params(opt.step(model.params(), grads))
        acc = accuracy(model, dataset)
        trace.append(EpochStats(epoch, total / n, acc))
    return TrainResult(model, trace)


def accuracy(model: ClassifierModel, graphs: list[Graph]) -> float:
    if not graphs:
        return float("nan")
    hits = sum(predict(g, model).label == g.label for g in graphs)
    return hits / len(graphs)


class LabelOracle:
    """Black-box view of a classifier: label queries only, counted."""

    def __init__(self, model: ClassifierModel):
        self._model = model
        self.queries = 0

    def __call__(self, g: Graph) -> int:
        self.queries += 1
        return predict(g, self._model).label


def relative_embedding_change(u_o, u_a) -> float:
    u_o = np.asarray(u_o, dtype=np.float64)
    u_a = np.asarray(u_a, dtype=np.float64)
    if u_o.shape != u_a.shape:
        raise InvalidInputError("embeddings differ in dimension")
    norm = np.linalg.norm(u_o)
    if norm == 0:
        raise DomainError("relative change undefined for a zero original embedding")
    return float(np.linalg.norm(u_a - u_o) / norm)
