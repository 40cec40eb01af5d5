"""Rewiring attack policy and its REINFORCE training loop.

An action is sampled in three stages, each a masked softmax over an MLP head
sitting on a two-layer GCN embedding of the current graph:

1. an edge, represented by ``[u, mean(F[e1], F[e2])]`` (width ``2d``);
2. which endpoint becomes ``fir``, each represented by ``[edge_rep, F[e_i]]`` (``3d``);
3. the third node ``c``, represented by ``[context, F[c]]`` (``4d``), where
   ``context`` is the first endpoint's ``3d`` vector (or the chosen endpoint's,
   with ``third_context="chosen"``).

Choices that cannot be completed into a valid action are masked to
probability zero, so every sample is a legal rewiring.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .checkpoint import FORMAT_VERSION, decode_arrays, encode_arrays, read_document, write_document
from .env import (AttackConfig, LabelOracle, Trajectory, reset, run_episode)
from .errors import ConfigurationError, EmptyActionSpaceError, InvalidInputError
from .graph import TWO_HOP, Graph, RewiringAction, third_node_candidates
from .layers import gcn_stack, glorot, mlp, normalized_adjacency
from .optim import SGD, clip_by_global_norm, make_optimizer

HEADS = ("edge", "fir", "thi")
HEAD_WIDTH = {"edge": 2, "fir": 3, "thi": 4}


@dataclass
class PolicyModel:
    params: dict[str, np.ndarray]
    embed_dim: int
    self_loops: bool = False
    third_context: str = "first"  # "first": endpoint e1 as printed; "chosen": the sampled fir

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        d = self.embed_dim
        try:
            w0, w1 = self.params["emb.0"], self.params["emb.1"]
            if w0.shape[1] != d or w1.shape != (d, d):
                raise InvalidInputError(f"embedder shapes {w0.shape}, {w1.shape} for width {d}")
            for head in HEADS:
                hw0, hb0 = self.params[f"{head}.w0"], self.params[f"{head}.b0"]
                hw1, hb1 = self.params[f"{head}.w1"], self.params[f"{head}.b1"]
                if hw0.shape[0] != HEAD_WIDTH[head] * d:
                    raise InvalidInputError(
                        f"{head} head takes width {hw0.shape[0]}, expected {HEAD_WIDTH[head] * d}")
                if hb0.shape != (hw0.shape[1],) or hw1.shape != (hw0.shape[1], 1) or hb1.shape != (1,):
                    raise InvalidInputError(f"{head} head has inconsistent shapes")
        except KeyError as exc:
            raise InvalidInputError(f"missing policy parameter {exc}") from exc
        if self.third_context not in ("first", "chosen"):
            raise InvalidInputError(f"unknown third_context {self.third_context!r}")

    @property
    def input_dim(self) -> int:
        return self.params["emb.0"].shape[0]

    def with_params(self, params: dict[str, np.ndarray]) -> "PolicyModel":
        return replace(self, params={k: np.asarray(v) for k, v in params.items()})

    def save(self, path) -> None:
        write_document(path, {
            "version": FORMAT_VERSION,
            "kind": "policy",
            "dims": {
                "input_dim": self.input_dim,
                "embed_dim": self.embed_dim,
                "head_widths": {h: HEAD_WIDTH[h] * self.embed_dim for h in HEADS},
                "head_hidden": {h: int(self.params[f"{h}.w0"].shape[1]) for h in HEADS},
            },
            "config": {"self_loops": self.self_loops, "third_context": self.third_context},
            "weights": encode_arrays(self.params),
        })

    @classmethod
    def load(cls, path) -> "PolicyModel":
        doc = read_document(path, "policy")
        try:
            model = cls(decode_arrays(doc["weights"]), int(doc["dims"]["embed_dim"]),
                        bool(doc["config"]["self_loops"]), doc["config"]["third_context"])
        except (KeyError, InvalidInputError) as exc:
            raise ConfigurationError(f"{path}: inconsistent policy checkpoint ({exc})") from exc
        if model.input_dim != doc["dims"]["input_dim"]:
            raise ConfigurationError(f"{path}: declared input width does not match weights")
        return model


def init_policy(input_dim: int, rng: np.random.Generator, embed_dim: int = 32,
                self_loops: bool = False, third_context: str = "first") -> PolicyModel:
    d = embed_dim
    params = {"emb.0": glorot(rng, input_dim, d), "emb.1": glorot(rng, d, d)}
    for head in HEADS:
        width = HEAD_WIDTH[head] * d
        params[f"{head}.w0"] = glorot(rng, width, d)
        params[f"{head}.b0"] = np.zeros(d)
        params[f"{head}.w1"] = glorot(rng, d, 1)
        params[f"{head}.b1"] = np.zeros(1)
    return PolicyModel(params, d, self_loops, third_context)


# --- forward pass -----------------------------------------------------------

class _Ctx:
    """Per-state masks: which nodes can act as ``fir`` and which edges are usable."""

    def __init__(self, g: Graph, mode: str):
        self.graph = g
        self.mode = mode
        self.edges = np.array(g.edges, dtype=np.intp).reshape(-1, 2)
        if mode == TWO_HOP:
            can_fir = g.two_hop.any(axis=1)
        else:
            can_fir = g.degrees < g.num_nodes - 1
        self.can_fir = can_fir & (g.degrees > 0)
        self.edge_mask = (self.can_fir[self.edges[:, 0]] | self.can_fir[self.edges[:, 1]]
                          if len(self.edges) else np.zeros(0, dtype=bool))


def _head(x, params, name):
    scores = mlp(x, [params[f"{name}.w0"], params[f"{name}.w1"]],
                 [params[f"{name}.b0"], params[f"{name}.b1"]])
    return ad.reshape(scores, (-1,))


def _embed(g: Graph, params, model: PolicyModel):
    if g.feature_dim != model.input_dim:
        raise InvalidInputError(
            f"graph has {g.feature_dim}-dim features, policy expects {model.input_dim}")
    f = gcn_stack(normalized_adjacency(g, model.self_loops), g.features,
                  [params["emb.0"], params["emb.1"]])
    return f, ad.max_pool(f)


def _edge_reps(f, u, edges):
    pair = (ad.take_rows(f, edges[:, 0]) + ad.take_rows(f, edges[:, 1])) * 0.5
    return ad.concat([ad.repeat_row(u, len(edges)), pair], axis=1)


def _endpoint_reps(f, edge_rep, e1, e2):
    rep = ad.repeat_row(edge_rep, 2)
    return ad.concat([rep, ad.take_rows(f, [e1, e2])], axis=1)


def _third_reps(f, context, cands):
    return ad.concat([ad.repeat_row(context, len(cands)), ad.take_rows(f, cands)], axis=1)


def _row(a, i):
    return ad.reshape(ad.take_rows(a, [i]), (-1,))


def _forward(g: Graph, params, model: PolicyModel, mode: str, rng=None,
             action: RewiringAction | None = None):
    """Run the three stages, sampling with ``rng`` or scoring a given ``action``.

    Returns the chosen action and the three stage log-probabilities as Vars.
    """
    ctx = _Ctx(g, mode)
    if not ctx.edge_mask.any():
        raise EmptyActionSpaceError("no admissible rewiring in this state")
    f, u = _embed(g, params, model)
    reps = _edge_reps(f, u, ctx.edges)
    edge_logp = ad.log_softmax(_head(reps, params, "edge"), ctx.edge_mask)

    if action is None:
        k = _draw(rng, edge_logp.value)
    else:
        key = (min(action.fir, action.sec), max(action.fir, action.sec))
        hits = np.flatnonzero((ctx.edges[:, 0] == key[0]) & (ctx.edges[:, 1] == key[1]))
        if hits.size == 0:
            raise InvalidInputError(f"{action}: ({action.fir}, {action.sec}) is not an edge")
        k = int(hits[0])
    e1, e2 = (int(x) for x in ctx.edges[k])
    edge_rep = _row(reps, k)

    ends = _endpoint_reps(f, edge_rep, e1, e2)
    fir_mask = np.array([ctx.can_fir[e1], ctx.can_fir[e2]])
    fir_logp = ad.log_softmax(_head(ends, params, "fir"), fir_mask)
    j = _draw(rng, fir_logp.value) if action is None else (0 if action.fir == e1 else 1)
    fir, sec = (e1, e2) if j == 0 else (e2, e1)

    context = _row(ends, j if model.third_context == "chosen" else 0)
    cands = third_node_candidates(g, fir, mode)
    thi_logp = ad.log_softmax(_head(_third_reps(f, context, cands), params, "thi"))
    if action is None:
        c = _draw(rng, thi_logp.value)
    else:
        hits = np.flatnonzero(cands == action.thi)
        if hits.size == 0:
            raise InvalidInputError(f"{action}: third node is not a candidate ({mode})")
        c = int(hits[0])
    chosen = RewiringAction(fir, sec, int(cands[c]))
    return chosen, (ad.pick(edge_logp, k), ad.pick(fir_logp, j), ad.pick(thi_logp, c))


def _draw(rng: np.random.Generator, logp: np.ndarray) -> int:
    p = np.exp(logp)
    p = p / p.sum()
    return int(rng.choice(len(p), p=p))


def _const_params(model: PolicyModel):
    return {k: ad.const(v) for k, v in model.params.items()}


# --- public distributions ---------------------------------------------------

def embed_state(g: Graph, model: PolicyModel) -> tuple[np.ndarray, np.ndarray]:
    f, u = _embed(g, _const_params(model), model)
    return f.value, u.value


def edge_distribution(g: Graph, model: PolicyModel, mode: str = TWO_HOP) -> np.ndarray:
    """Probabilities over ``g.edges`` (zero for edges with no valid completion)."""
    ctx = _Ctx(g, mode)
    if not ctx.edge_mask.any():
        raise EmptyActionSpaceError("no admissible edge")
    params = _const_params(model)
    f, u = _embed(g, params, model)
    logp = ad.log_softmax(_head(_edge_reps(f, u, ctx.edges), params, "edge"), ctx.edge_mask)
    return np.exp(logp.value)


def first_node_distribution(g: Graph, edge: tuple[int, int], model: PolicyModel,
                            mode: str = TWO_HOP) -> np.ndarray:
    """Probabilities that ``edge[0]`` resp. ``edge[1]`` becomes the first node."""
    ctx = _Ctx(g, mode)
    e1, e2 = edge
    if not g.has_edge(e1, e2):
        raise InvalidInputError(f"{edge} is not an edge")
    mask = np.array([ctx.can_fir[e1], ctx.can_fir[e2]])
    if not mask.any():
        raise EmptyActionSpaceError(f"neither endpoint of {edge} admits a third node")
    params = _const_params(model)
    f, u = _embed(g, params, model)
    rep = _row(_edge_reps(f, u, np.array([[e1, e2]])), 0)
    logp = ad.log_softmax(_head(_endpoint_reps(f, rep, e1, e2), params, "fir"), mask)
    return np.exp(logp.value)


def third_node_distribution(g: Graph, fir: int, edge: tuple[int, int], model: PolicyModel,
                            mode: str = TWO_HOP) -> tuple[np.ndarray, np.ndarray]:
    """Candidate third nodes for ``fir`` and their probabilities."""
    e1, e2 = edge
    if fir not in (e1, e2) or not g.has_edge(e1, e2):
        raise InvalidInputError(f"fir={fir} is not an endpoint of edge {edge}")
    cands = third_node_candidates(g, fir, mode)
    if cands.size == 0:
        raise EmptyActionSpaceError(f"node {fir} has no third-node candidates")
    params = _const_params(model)
    f, u = _embed(g, params, model)
    rep = _row(_edge_reps(f, u, np.array([[e1, e2]])), 0)
    ends = _endpoint_reps(f, rep, e1, e2)
    context = _row(ends, 1 if (model.third_context == "chosen" and fir == e2) else 0)
    logp = ad.log_softmax(_head(_third_reps(f, context, cands), params, "thi"))
    return cands, np.exp(logp.value)


@dataclass(frozen=True)
class ActionSample:
    action: RewiringAction
    log_prob: float
    stage_probs: tuple[float, float, float]


def sample_action(g: Graph, model: PolicyModel, cfg: AttackConfig | None,
                  rng: np.random.Generator) -> ActionSample:
    mode = cfg.third_node_mode if cfg is not None else TWO_HOP
    action, stages = _forward(g, _const_params(model), model, mode, rng=rng)
    logs = [float(s.value) for s in stages]
    return ActionSample(action, sum(logs), tuple(float(np.exp(x)) for x in logs))


def action_log_prob(g: Graph, action: RewiringAction, model: PolicyModel,
                    mode: str = TWO_HOP) -> float:
    _, stages = _forward(g, _const_params(model), model, mode, action=action)
    return sum(float(s.value) for s in stages)


def policy_chooser(model: PolicyModel, cfg: AttackConfig, rng: np.random.Generator):
    def choose(g: Graph):
        s = sample_action(g, model, cfg, rng)
        return s.action, s.log_prob
    return choose


def rewatt_attack(g: Graph, oracle: LabelOracle, model: PolicyModel, cfg: AttackConfig,
                  rng: np.random.Generator, original_label: int | None = None) -> Trajectory:
    if original_label is None:
        original_label = oracle(g)
    return run_episode(g, original_label, oracle, cfg, policy_chooser(model, cfg, rng))


# --- REINFORCE --------------------------------------------------------------

def returns_to_go(rewards) -> np.ndarray:
    return np.cumsum(np.asarray(rewards, dtype=np.float64)[::-1])[::-1]


def reinforce_loss(trajectories: list[Trajectory], model: PolicyModel, mode: str = TWO_HOP,
                   params: dict | None = None):
    """``-sum_t log pi(a_t|s_t) (G_t - b)`` with a batch-mean baseline ``b``.

    Returns the loss Var, the parameter Vars, and the per-step advantages.
    """
    steps = [(s, g_t) for tr in trajectories
             for s, g_t in zip(tr.steps, returns_to_go(tr.rewards))]
    if not steps:
        raise InvalidInputError("REINFORCE needs at least one step")
    returns = np.array([g_t for _, g_t in steps])
    adv = returns - returns.mean()
    if params is None:
        params = {k: ad.param(v) for k, v in model.params.items()}
    terms = []
    for (step, _), a in zip(steps, adv):
        if a == 0.0:
            continue
        _, stages = _forward(step.state, params, model, mode, action=step.action)
        terms.append(ad.total(stages) * (-a))
    loss = ad.total(terms) if terms else ad.const(0.0)
    return loss, params, adv


@dataclass
class UpdateInfo:
    loss: float
    grad_norm: float
    baseline: float
    num_steps: int


def reinforce_update(trajectories: list[Trajectory], model: PolicyModel, lr: float = 0.01,
                     optimizer=None, clip: float = 1.0,
                     mode: str = TWO_HOP) -> tuple[PolicyModel, UpdateInfo]:
    """One policy-gradient step.  Plain gradient descent at ``lr`` unless an optimizer is given."""
    if not trajectories:
        raise InvalidInputError("empty trajectory batch")
    loss, params, adv = reinforce_loss(trajectories, model, mode)
    all_returns = np.concatenate([returns_to_go(t.rewards) for t in trajectories if t.steps])
    info = UpdateInfo(float(loss.value), 0.0, float(all_returns.mean()), len(adv))
    if not np.any(adv != 0.0):
        return model, info
    loss.backward()
    grads = {k: (v.grad if v.grad is not None else np.zeros_like(v.value)) for k, v in params.items()}
    grads, norm = clip_by_global_norm(grads, clip)
    info.grad_norm = norm
    opt = optimizer or SGD(lr)
    return model.with_params(opt.step(model.params, grads)), info


@dataclass
class AttackerHyper:
    embed_dim: int = 32
    epochs: int = 20
    batch_size: int = 8
    lr: float = 0.01
    optimizer: str = "adam"
    clip: float = 1.0
    self_loops: bool = False
    third_context: str = "first"
    episodes_per_graph: int = 1


@dataclass
class AttackerResult:
    model: PolicyModel
    success_curve: list[float] = field(default_factory=list)


def train_attacker(train_graphs: list[Graph], oracle: LabelOracle, cfg: AttackConfig,
                   hyper: AttackerHyper, rng: np.random.Generator,
                   original_labels: list[int] | None = None) -> AttackerResult:
    """REINFORCE over episodes on ``train_graphs``; records per-epoch success rate."""
    if not train_graphs:
        raise InvalidInputError("no attacker training graphs")
    if original_labels is None:
        original_labels = [int(oracle(g)) for g in train_graphs]
    model = init_policy(train_graphs[0].feature_dim, rng, hyper.embed_dim, hyper.self_loops,
                        hyper.third_context)
    opt = make_optimizer(hyper.optimizer, hyper.lr)
    curve = []
    batch: list[Trajectory] = []
    for _ in range(hyper.epochs):
        wins = total = 0
        order = np.repeat(rng.permutation(len(train_graphs)), hyper.episodes_per_graph)
        for i in order:
            g = train_graphs[i]
            if reset(g, original_labels[i], cfg).done:
                continue
            traj = run_episode(g, original_labels[i], oracle, cfg, policy_chooser(model, cfg, rng))
            total += 1
            wins += traj.succeeded
            batch.append(traj)
            if len(batch) >= hyper.batch_size:
                model, _ = reinforce_update(batch, model, hyper.lr, opt, hyper.clip,
                                            cfg.third_node_mode)
                batch = []
        curve.append(wins / total if total else 0.0)
    if batch:
        model, _ = reinforce_update(batch, model, hyper.lr, opt, hyper.clip, cfg.third_node_mode)
    return AttackerResult(model, curve)
