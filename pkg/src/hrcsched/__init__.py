"""Makespan-minimizing schedulers for human-robot assembly jobs.

A job is a grid of task stones. Agents repeatedly pick stones from the
bottom row, stones above settle downward, and the schedule's quality is
the time the last task finishes. The package provides the game engine, a
tree search guided by a small convolutional network trained by self-play,
an exhaustive-search oracle, a random baseline, and a command line tool.
"""

from .baselines import (
    BUDGET_EXCEEDED,
    COMPLETE,
    DepthRow,
    OracleResult,
    SampleStats,
    exhaustive_search,
    histogram_csv,
    oracle_report_csv,
    random_rollouts,
)
from .board import Board, BoardError, PickOutcome, Stone
from .game import (
    NOOP,
    Agent,
    AgentAction,
    AgentState,
    DeadlockError,
    Decision,
    EpisodeRecord,
    GameError,
    GameState,
    IllegalActionError,
    JobContext,
    TransitionResult,
    advance_time,
    apply_pick,
    episode_log_csv,
    initial_state,
    is_stalled,
    is_terminal,
    legal_actions,
    next_agent,
    pick,
    run_episode,
    schedule_csv,
    transition,
)
from .jobspec import (
    EITHER,
    HUMAN_ONLY,
    ROBOT_ONLY,
    JobSpec,
    JobSpecError,
    Task,
    derive_precedence,
    desk_fixture,
    parse_jobspec,
    serialize_jobspec,
)
from .net import (
    CheckpointError,
    NetEvaluator,
    PolicyValue,
    TrainingExample,
    UniformEvaluator,
    dumps_checkpoint,
    encode_state,
    forward,
    gradients,
    init_params,
    load_checkpoint,
    loads_checkpoint,
    loss,
    loss_and_gradients,
    loss_components,
    network_width,
    plan_blocks,
    save_checkpoint,
    sgd_step,
)
from .search import SearchConfig, SearchNode, SearchTree, search
from .selfplay import (
    IterationReport,
    ReplayBuffer,
    TrainingConfig,
    avoid_stall,
    clip_gradients,
    episode_seed,
    generate_episode,
    train_iteration,
    training_log_csv,
    training_loop,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentAction",
    "AgentState",
    "BUDGET_EXCEEDED",
    "Board",
    "BoardError",
    "COMPLETE",
    "CheckpointError",
    "DeadlockError",
    "Decision",
    "DepthRow",
    "EITHER",
    "EpisodeRecord",
    "GameError",
    "GameState",
    "HUMAN_ONLY",
    "IllegalActionError",
    "IterationReport",
    "JobContext",
    "JobSpec",
    "JobSpecError",
    "NOOP",
    "NetEvaluator",
    "OracleResult",
    "PickOutcome",
    "PolicyValue",
    "ROBOT_ONLY",
    "ReplayBuffer",
    "SampleStats",
    "SearchConfig",
    "SearchNode",
    "SearchTree",
    "Stone",
    "Task",
    "TrainingConfig",
    "TrainingExample",
    "TransitionResult",
    "UniformEvaluator",
    "advance_time",
    "apply_pick",
    "avoid_stall",
    "clip_gradients",
    "derive_precedence",
    "desk_fixture",
    "dumps_checkpoint",
    "encode_state",
    "episode_log_csv",
    "episode_seed",
    "exhaustive_search",
    "forward",
    "generate_episode",
    "gradients",
    "histogram_csv",
    "init_params",
    "initial_state",
    "is_stalled",
    "is_terminal",
    "legal_actions",
    "load_checkpoint",
    "loads_checkpoint",
    "loss",
    "loss_and_gradients",
    "loss_components",
    "network_width",
    "next_agent",
    "oracle_report_csv",
    "parse_jobspec",
    "pick",
    "plan_blocks",
    "random_rollouts",
    "run_episode",
    "save_checkpoint",
    "schedule_csv",
    "search",
    "serialize_jobspec",
    "sgd_step",
    "train_iteration",
    "training_log_csv",
    "training_loop",
    "transition",
]
