"""PUCT tree search over micro-decisions.

Each node is a state where one idle agent must act; its edges are that
agent's legal actions. Traversing an epoch-closing edge carries the step
reward and increases depth by one, so a depth limit counts completions
looked ahead, not individual picks. Backed-up values are undiscounted sums
of the rewards met along the path plus the leaf evaluation, in raw
(negative) time units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import NOOP, AgentAction, GameState, is_stalled, is_terminal, next_agent, transition


@dataclass
class SearchConfig:
    c_puct: float = 100.0
    max_depth: int | None = 3  # None looks ahead without limit
    simulations: int = 30
    noop_prior: float = 0.001
    seed: int = 0


@dataclass
class Edge:
    action: AgentAction
    prior: float
    visits: int = 0
    total_value: float = 0.0
    reward: int = 0
    child: "SearchNode | None" = None

    @property
    def mean_value(self) -> float:
        return self.total_value / self.visits if self.visits else 0.0


@dataclass
class SearchNode:
    state: GameState
    depth: int  # epochs advanced since the episode root; limits apply relative to the current root
    edges: list[Edge] | None = None  # None until expanded
    visits: int = 0
    cached_value: float | None = None

    @property
    def expanded(self) -> bool:
        return self.edges is not None


def _edge_order_key(edge: Edge, state: GameState):
    # Ties prefer a higher prior, then a lower column; NoOp loses all ties.
    if edge.action.is_noop:
        return (edge.prior, 0, 0)
    col = state.job.tasks[edge.action.task].col
    return (edge.prior, 1, -col)


def select_edge(node: SearchNode, c_puct: float) -> Edge:
    """Pick the edge maximising Q + c * P * sqrt(sum visits) / (1 + visits)."""
    total = sum(e.visits for e in node.edges)
    sqrt_total = math.sqrt(total)
    best = None
    best_key = None
    for edge in node.edges:
        score = edge.mean_value + c_puct * edge.prior * sqrt_total / (1 + edge.visits)
        key = (score,) + _edge_order_key(edge, node.state)
        if best_key is None or key > best_key:
            best, best_key = edge, key
    return best


def masked_priors(p: np.ndarray, columns: list[int]) -> np.ndarray:
    """Network column probabilities restricted to the legal set, renormalised.

    Ratios among the kept entries are preserved.
    """
    masked = np.asarray([p[c] for c in columns], dtype=float)
    total = masked.sum()
    if total <= 0:
        return np.full(len(columns), 1.0 / len(columns))
    return masked / total


def expand_and_evaluate(node: SearchNode, evaluator, noop_prior: float) -> float:
    """Populate the node's edges from the evaluator and return its value.

    Pick priors come from the network's column distribution masked to the
    legal picks; NoOp receives a small fixed prior and the whole vector is
    renormalised. Terminal nodes get value 0 and no edges.
    """
    state = node.state
    if is_terminal(state):
        node.edges = []
        return 0.0

    agent = next_agent(state)
    actions = [a for a in _legal(state, agent)]
    p, value = evaluator(state)

    picks = [a for a in actions if not a.is_noop]
    priors: dict[AgentAction, float] = {}
    if picks:
        cols = [state.job.tasks[a.task].col for a in picks]
        pick_p = masked_priors(np.asarray(p, dtype=float), cols)
        weights = {a: float(w) for a, w in zip(picks, pick_p)}
        weights[NOOP] = noop_prior
        total = sum(weights.values())
        priors = {a: w / total for a, w in weights.items()}
    else:
        priors = {NOOP: 1.0}

    node.edges = [Edge(action=a, prior=priors[a]) for a in actions]
    return float(value)


def _legal(state, agent):
    from .game import legal_actions

    return legal_actions(state, agent)


def backup(path: list[tuple[SearchNode, Edge]], leaf_value: float) -> None:
    """Credit a finished simulation to every edge on its path.

    Each edge receives the rewards collected from its own transition
    onwards plus the leaf value, all undiscounted.
    """
    value = leaf_value
    for node, edge in reversed(path):
        value += edge.reward
        edge.visits += 1
        edge.total_value += value
        node.visits += 1


def _stall_value(state: GameState) -> float:
    # Strictly worse than any real completion, which costs at most the
    # serial sum of all durations.
    return -2.0 * state.job.total_duration()


class SearchTree:
    """A persistent tree reused across the decisions of one episode."""

    def __init__(self, state: GameState, evaluator, config: SearchConfig | None = None):
        self.config = config or SearchConfig()
        self.evaluator = evaluator
        self.root = SearchNode(state=state, depth=0)

    def run(self) -> tuple[list[tuple[AgentAction, float]], AgentAction]:
        """Run the configured simulations from the root.

        Returns (visit-count policy over the root actions, chosen action).
        The chosen action has the most visits; ties go to the higher prior,
        then the lower column, with NoOp last. A root with a single legal
        action is answered immediately.
        """
        cfg = self.config
        if not self.root.expanded:
            expand_and_evaluate(self.root, self.evaluator, cfg.noop_prior)
        if is_terminal(self.root.state):
            raise ValueError("cannot search from a terminal state")
        if len(self.root.edges) == 1:
            return [(self.root.edges[0].action, 1.0)], self.root.edges[0].action

        for _ in range(cfg.simulations):
            self._simulate()

        total = sum(e.visits for e in self.root.edges)
        if total == 0:
            policy = [(e.action, e.prior) for e in self.root.edges]
        else:
            policy = [(e.action, e.visits / total) for e in self.root.edges]
        chosen = max(
            self.root.edges,
            key=lambda e: (e.visits,) + _edge_order_key(e, self.root.state),
        ).action
        return policy, chosen

    def _depth_capped(self, node: SearchNode) -> bool:
        if self.config.max_depth is None:
            return False
        return node.depth - self.root.depth >= self.config.max_depth

    def _simulate(self) -> None:
        cfg = self.config
        node = self.root
        path: list[tuple[SearchNode, Edge]] = []

        while node.expanded and node.edges:
            edge = select_edge(node, cfg.c_puct)
            if edge.child is None:
                child_state, reward, advanced = transition(node.state, edge.action)
                edge.reward = reward
                edge.child = SearchNode(state=child_state, depth=node.depth + int(advanced))
            path.append((node, edge))
            node = edge.child
            if is_terminal(node.state) or is_stalled(node.state):
                break
            if self._depth_capped(node):
                break

        leaf_value = self._evaluate_leaf(node)
        backup(path, leaf_value)

    def _evaluate_leaf(self, node: SearchNode) -> float:
        if is_terminal(node.state):
            return 0.0
        if is_stalled(node.state):
            return _stall_value(node.state)
        if self._depth_capped(node):
            # depth-capped leaf: evaluated by the network, never expanded
            if node.cached_value is None:
                _, value = self.evaluator(node.state)
                node.cached_value = float(value)
            return node.cached_value
        return expand_and_evaluate(node, self.evaluator, self.config.noop_prior)

    def advance_root(self, action: AgentAction) -> None:
        """Keep the subtree behind the action taken; drop everything else."""
        if not self.root.expanded:
            expand_and_evaluate(self.root, self.evaluator, self.config.noop_prior)
        for edge in self.root.edges:
            if edge.action == action:
                if edge.child is None:
                    child_state, reward, advanced = transition(self.root.state, action)
                    edge.reward = reward
                    edge.child = SearchNode(
                        state=child_state, depth=self.root.depth + int(advanced)
                    )
                self.root = edge.child
                return
        raise ValueError(f"{action} is not an edge of the root")


def search(
    state: GameState, evaluator, config: SearchConfig | None = None
) -> tuple[list[tuple[AgentAction, float]], AgentAction]:
    """One-shot search from a state; builds a fresh tree and runs it."""
    return SearchTree(state, evaluator, config).run()
