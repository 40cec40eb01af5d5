"""Episodic rewiring attack: budget, step penalty, transitions, termination.

The victim is reached only through a label-query callable.  Each step
applies one rewiring and spends exactly one query on the resulting graph.
The clean graph's label is supplied by the caller when an episode starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import InvalidInputError, ProtocolError, RejectedActionError
from .graph import (ANY_NODE, THIRD_NODE_MODES, TWO_HOP, Graph, RewiringAction,
                    apply_rewiring, is_valid_rewiring, rewiring_candidates)

LabelOracle = Callable[[Graph], int]

SUCCESS = "success"
BUDGET_EXHAUSTED = "budget_exhausted"
NO_VALID_ACTION = "no_valid_action"

VARIANTS = ("rewatt", "rewatt-a", "rewatt-n", "random", "random-s")


@dataclass(frozen=True)
class AttackConfig:
    budget_mode: str = "ratio"          # "ratio" (K = p|E|) or "fixed"
    p: float = 0.03
    fixed_k: int = 1
    step_penalty_mode: str = "flexible"  # "flexible" (-1/K) or "fixed"
    fixed_penalty: float = -0.5
    third_node_mode: str = TWO_HOP

    def __post_init__(self):
        if self.budget_mode not in ("ratio", "fixed"):
            raise InvalidInputError(f"unknown budget mode {self.budget_mode!r}")
        if not 0 < self.p < 1:
            raise InvalidInputError("budget ratio p must lie in (0, 1)")
        if self.fixed_k < 1:
            raise InvalidInputError("fixed budget must be at least 1")
        if self.step_penalty_mode not in ("flexible", "fixed"):
            raise InvalidInputError(f"unknown penalty mode {self.step_penalty_mode!r}")
        if not self.fixed_penalty < 0:
            raise InvalidInputError("fixed step penalty must be negative")
        if self.third_node_mode not in THIRD_NODE_MODES:
            raise InvalidInputError(f"unknown third-node mode {self.third_node_mode!r}")


def variant_config(variant: str, base: AttackConfig | None = None) -> AttackConfig:
    """Attack settings for a named variant, keeping the budget of ``base``."""
    base = base or AttackConfig()
    if variant in ("rewatt", "random", "random-s"):
        return replace(base, step_penalty_mode="flexible", third_node_mode=TWO_HOP)
    if variant == "rewatt-a":
        return replace(base, step_penalty_mode="flexible", third_node_mode=ANY_NODE)
    if variant == "rewatt-n":
        return replace(base, step_penalty_mode="fixed", third_node_mode=TWO_HOP)
    raise InvalidInputError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def compute_budget(g: Graph, cfg: AttackConfig) -> int:
    if cfg.budget_mode == "fixed":
        return cfg.fixed_k
    if g.num_edges == 0:
        raise InvalidInputError("ratio budget undefined for a graph without edges")
    # tolerance guards products such as 0.03 * 100 = 2.9999999999999996
    return max(1, math.floor(cfg.p * g.num_edges + 1e-9))


def step_penalty(g: Graph, cfg: AttackConfig) -> float:
    if cfg.step_penalty_mode == "fixed":
        compute_budget(g, cfg)
        return cfg.fixed_penalty
    return -1.0 / compute_budget(g, cfg)


@dataclass(frozen=True)
class EpisodeState:
    current_graph: Graph
    original_label: int
    budget: int
    penalty: float
    third_node_mode: str = TWO_HOP
    steps_taken: int = 0
    done: bool = False
    outcome: str | None = None


def has_valid_action(g: Graph, mode: str = TWO_HOP) -> bool:
    if g.num_edges == 0:
        return False
    if mode == TWO_HOP:
        deg = g.degrees
        return bool(np.any(g.two_hop.any(axis=1) & (deg > 0)))
    deg = g.degrees
    return bool(np.any((deg > 0) & (deg < g.num_nodes - 1)))


def reset(g: Graph, original_label: int, cfg: AttackConfig) -> EpisodeState:
    state = EpisodeState(g, int(original_label), compute_budget(g, cfg), step_penalty(g, cfg),
                         cfg.third_node_mode)
    if not has_valid_action(g, cfg.third_node_mode):
        state = replace(state, done=True, outcome=NO_VALID_ACTION)
    return state


def env_step(state: EpisodeState, action: RewiringAction, oracle: LabelOracle,
             cfg: AttackConfig | None = None) -> tuple[EpisodeState, float]:
    """Apply ``action``, query the label of the result, and score it.

    ``cfg`` is accepted for symmetry with :func:`reset`; the episode's budget,
    penalty and third-node rule were fixed when it started.
    """
    if state.done:
        raise ProtocolError("episode already finished")
    mode = state.third_node_mode
    if not is_valid_rewiring(state.current_graph, action, mode):
        raise RejectedActionError(f"{action} is not admissible ({mode})")
    g_next = apply_rewiring(state.current_graph, action, mode)
    steps = state.steps_taken + 1
    label = int(oracle(g_next))
    if label != state.original_label:
        return replace(state, current_graph=g_next, steps_taken=steps, done=True,
                       outcome=SUCCESS), 1.0
    outcome = None
    if steps >= state.budget:
        outcome = BUDGET_EXHAUSTED
    elif not has_valid_action(g_next, mode):
        outcome = NO_VALID_ACTION
    return replace(state, current_graph=g_next, steps_taken=steps, done=outcome is not None,
                   outcome=outcome), state.penalty


@dataclass(frozen=True)
class Step:
    state: Graph
    action: RewiringAction
    reward: float
    log_prob: float


@dataclass
class Trajectory:
    steps: list[Step] = field(default_factory=list)
    outcome: str | None = None
    final_graph: Graph | None = None
    budget: int = 0
    original_label: int | None = None

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    @property
    def succeeded(self) -> bool:
        return self.outcome == SUCCESS

    @property
    def queries(self) -> int:
        return len(self.steps)

    @property
    def rewards(self) -> list[float]:
        return [s.reward for s in self.steps]

    @property
    def actions(self) -> list[RewiringAction]:
        return [s.action for s in self.steps]


# chooser(graph) -> (action, log-probability of choosing it)
Chooser = Callable[[Graph], tuple[RewiringAction, float]]


def run_episode(g: Graph, original_label: int, oracle: LabelOracle, cfg: AttackConfig,
                choose: Chooser, budget: int | None = None) -> Trajectory:
    state = reset(g, original_label, cfg)
    if budget is not None:
        state = replace(state, budget=budget)
        if budget == 0 and not state.done:
            state = replace(state, done=True, outcome=BUDGET_EXHAUSTED)
    traj = Trajectory(budget=state.budget, original_label=int(original_label))
    while not state.done:
        before = state.current_graph
        action, log_prob = choose(before)
        state, reward = env_step(state, action, oracle, cfg)
        traj.steps.append(Step(before, action, reward, float(log_prob)))
    traj.outcome = state.outcome
    traj.final_graph = state.current_graph
    return traj


def uniform_chooser(rng: np.random.Generator, mode: str = TWO_HOP) -> Chooser:
    def choose(g: Graph):
        cands = rewiring_candidates(g, mode)
        return cands[rng.integers(len(cands))], -math.log(len(cands))
    return choose


def random_attack(g: Graph, oracle: LabelOracle, cfg: AttackConfig, rng: np.random.Generator,
                  original_label: int | None = None) -> Trajectory:
    """Uniformly random valid rewirings until success or the budget runs out."""
    if original_label is None:
        original_label = oracle(g)
    return run_episode(g, original_label, oracle, cfg, uniform_chooser(rng, cfg.third_node_mode))


def random_s_attack(g: Graph, oracle: LabelOracle, step_count: int, rng: np.random.Generator,
                    original_label: int | None = None,
                    cfg: AttackConfig | None = None) -> Trajectory:
    """Random rewiring limited to ``step_count`` actions (a recorded attacker's step count)."""
    if step_count < 0:
        raise InvalidInputError("step_count must be non-negative")
    cfg = cfg or AttackConfig()
    if original_label is None:
        original_label = oracle(g)
    if g.num_edges == 0:
        return Trajectory(outcome=NO_VALID_ACTION, final_graph=g, budget=step_count,
                          original_label=int(original_label))
    return run_episode(g, original_label, oracle, cfg, uniform_chooser(rng, cfg.third_node_mode),
                       budget=step_count)
