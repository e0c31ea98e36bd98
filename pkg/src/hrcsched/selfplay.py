"""Self-play policy iteration.

Each iteration plays a batch of search-guided episodes, files every
decision into a replay buffer as (input, visit-count policy, return-to-go),
trains the network on the buffer, and evaluates one greedy episode. The
whole loop is deterministic given the master seed: episode e of iteration k
is seeded with master * 1000003 + k * 1009 + e.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .game import (
    Decision,
    DeadlockError,
    EpisodeRecord,
    initial_state,
    is_stalled,
    is_terminal,
    next_agent,
    transition,
)
from .jobspec import JobSpec
from .net import (
    NetEvaluator,
    TrainingExample,
    encode_state,
    init_params,
    loss_and_gradients,
    save_checkpoint,
    sgd_step,
)
from .search import SearchConfig, SearchTree

SEED_ITERATION_STRIDE = 1_009
SEED_MASTER_STRIDE = 1_000_003


def episode_seed(master_seed: int, iteration: int, episode: int) -> int:
    return master_seed * SEED_MASTER_STRIDE + iteration * SEED_ITERATION_STRIDE + episode


class ReplayBuffer:
    """FIFO buffer of training examples; old episodes fall out first."""

    def __init__(self, capacity: int = 5000):
        self.capacity = capacity
        self._items: deque[TrainingExample] = deque(maxlen=capacity)

    def add(self, examples) -> None:
        self._items.extend(examples)

    def __len__(self) -> int:
        return len(self._items)

    def snapshot(self) -> list[TrainingExample]:
        return list(self._items)


def _column_policy(state, policy_pairs) -> np.ndarray:
    """Fold the action policy onto columns, dropping any NoOp mass.

    Returns zeros when the picks carried no visits (a NoOp-only decision);
    such decisions produce no training example.
    """
    width = state.job.spec.width
    out = np.zeros(width)
    for action, prob in policy_pairs:
        if not action.is_noop:
            out[state.job.tasks[action.task].col] += prob
    total = out.sum()
    if total > 0:
        out /= total
    return out


def avoid_stall(state, chosen, policy_pairs):
    """Declining is not playable when it would leave every agent idle."""
    if not chosen.is_noop:
        return chosen
    nxt, _, _ = transition(state, chosen)
    if not is_stalled(nxt):
        return chosen
    picks = [(a, p) for a, p in policy_pairs if not a.is_noop]
    if not picks:
        raise DeadlockError("nothing to work on and nobody busy")
    return max(picks, key=lambda ap: ap[1])[0]


def generate_episode(
    spec: JobSpec,
    evaluator,
    search_config: SearchConfig | None = None,
    seed: int = 0,
    temperature_moves: int = 4,
    strict: bool = True,
) -> tuple[EpisodeRecord, list[TrainingExample]]:
    """Play one search-guided episode, reusing the tree between decisions.

    The first ``temperature_moves`` micro-decisions sample from the visit
    distribution; later ones take the most-visited action. Examples are
    produced when the evaluator exposes its input height and width.
    """
    config = search_config or SearchConfig()
    rng = np.random.default_rng(seed)
    state = initial_state(spec, strict=strict)
    tree = SearchTree(state, evaluator, config)
    encode_dims = (
        (evaluator.height, evaluator.width)
        if hasattr(evaluator, "height") and hasattr(evaluator, "width")
        else None
    )

    decisions: list[Decision] = []
    rewards: list[int] = []
    schedule = {a: [] for a in state.job.roster}
    epoch = 0
    move = 0

    while not is_terminal(state):
        agent = next_agent(state)
        policy_pairs, chosen = tree.run()
        if move < temperature_moves and len(policy_pairs) > 1:
            probs = np.asarray([p for _, p in policy_pairs])
            probs = probs / probs.sum()
            chosen = policy_pairs[int(rng.choice(len(policy_pairs), p=probs))][0]
        move += 1
        chosen = avoid_stall(state, chosen, policy_pairs)

        decisions.append(
            Decision(state.copy(), agent, chosen, _column_policy(state, policy_pairs), epoch)
        )
        if not chosen.is_noop:
            start = state.clock
            schedule[agent].append(
                (chosen.task, start, start + state.job.tasks[chosen.task].duration)
            )

        tree.advance_root(chosen)
        previous_clock = state.clock
        state = tree.root.state
        if state.clock != previous_clock:
            rewards.append(previous_clock - state.clock)
            epoch += 1

    record = EpisodeRecord(
        decisions=decisions, rewards=rewards, makespan=state.clock, schedule=schedule
    )

    examples: list[TrainingExample] = []
    if encode_dims is not None:
        for d in decisions:
            if d.policy.sum() > 0:
                examples.append(
                    TrainingExample(
                        x=encode_state(d.state, *encode_dims),
                        policy=d.policy,
                        value=float(d.state.clock - record.makespan),
                    )
                )
    return record, examples


def clip_gradients(grads, max_norm: float):
    """Scale the whole gradient down when its global norm exceeds the cap.

    Value targets are raw times, so early batches see errors of hundreds of
    units whose gradients would blow the network up under momentum; the cap
    bounds each step while leaving converged training untouched.
    """
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if total <= max_norm or total == 0.0:
        return grads
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}


def train_iteration(
    buffer: ReplayBuffer,
    params,
    epochs: int = 5,
    batch_size: int = 32,
    seed: int = 0,
    learning_rate: float = 0.01,
    momentum: float = 0.9,
    l2: float = 1e-4,
    max_grad_norm: float = 10.0,
):
    """Minibatch SGD over the whole buffer. Returns (params, ce, mse) with
    the losses averaged over every step taken."""
    data = buffer.snapshot()
    if not data or epochs == 0:
        return params, 0.0, 0.0

    rng = np.random.default_rng(seed)
    velocity = None
    ce_values: list[float] = []
    mse_values: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(len(data))
        for lo in range(0, len(data), batch_size):
            batch = [data[i] for i in order[lo : lo + batch_size]]
            _, ce, mse, grads = loss_and_gradients(params, batch, l2)
            grads = clip_gradients(grads, max_grad_norm)
            params, velocity = sgd_step(params, grads, learning_rate, momentum, velocity)
            ce_values.append(ce)
            mse_values.append(mse)
    return params, float(np.mean(ce_values)), float(np.mean(mse_values))


@dataclass
class TrainingConfig:
    iterations: int = 10
    episodes: int = 10
    search: SearchConfig = field(default_factory=SearchConfig)
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    l2: float = 1e-4
    max_grad_norm: float = 10.0
    capacity: int = 5000
    temperature_moves: int = 4
    seed: int = 0
    strict: bool = True
    filters: tuple[int, ...] = (10, 10)
    dense_units: int = 128


@dataclass
class IterationReport:
    iteration: int
    episodes: int
    mean_makespan: float
    best_makespan: int
    policy_loss: float
    value_loss: float


def training_loop(
    spec: JobSpec,
    config: TrainingConfig | None = None,
    out_dir=None,
    progress=None,
):
    """Run the full policy-iteration loop. Returns (reports, final params).

    Checkpoints are written per iteration (and a final one) when ``out_dir``
    is given. ``progress`` is called with each IterationReport as it lands.
    """
    cfg = config or TrainingConfig()
    params = init_params(
        spec.height,
        spec.width,
        filters=cfg.filters,
        dense_units=cfg.dense_units,
        seed=cfg.seed,
    )
    buffer = ReplayBuffer(cfg.capacity)
    reports: list[IterationReport] = []
    best: int | None = None

    for k in range(cfg.iterations):
        evaluator = NetEvaluator(params, spec.height, spec.width)
        makespans: list[int] = []
        for e in range(cfg.episodes):
            record, examples = generate_episode(
                spec,
                evaluator,
                cfg.search,
                seed=episode_seed(cfg.seed, k, e),
                temperature_moves=cfg.temperature_moves,
                strict=cfg.strict,
            )
            buffer.add(examples)
            makespans.append(record.makespan)

        params, ce, mse = train_iteration(
            buffer,
            params,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            seed=episode_seed(cfg.seed, k, cfg.episodes + 1),
            learning_rate=cfg.learning_rate,
            momentum=cfg.momentum,
            l2=cfg.l2,
            max_grad_norm=cfg.max_grad_norm,
        )

        greedy, _ = generate_episode(
            spec,
            NetEvaluator(params, spec.height, spec.width),
            cfg.search,
            seed=episode_seed(cfg.seed, k, cfg.episodes),
            temperature_moves=0,
            strict=cfg.strict,
        )
        candidates = makespans + [greedy.makespan]
        best = min(candidates) if best is None else min(best, *candidates)

        report = IterationReport(
            iteration=k,
            episodes=cfg.episodes,
            mean_makespan=float(np.mean(makespans)),
            best_makespan=best,
            policy_loss=ce,
            value_loss=mse,
        )
        reports.append(report)
        if progress is not None:
            progress(report)
        if out_dir is not None:
            save_checkpoint(params, os.path.join(out_dir, f"checkpoint_{k:03d}.txt"))

    if out_dir is not None:
        save_checkpoint(params, os.path.join(out_dir, "checkpoint_final.txt"))
    return reports, params


def training_log_csv(reports: list[IterationReport]) -> str:
    lines = ["iteration,episodes,mean_makespan,best_makespan,policy_loss,value_loss"]
    for r in reports:
        lines.append(
            f"{r.iteration},{r.episodes},{r.mean_makespan:.6g},{r.best_makespan},"
            f"{r.policy_loss:.6g},{r.value_loss:.6g}"
        )
    return "\n".join(lines) + "\n"
