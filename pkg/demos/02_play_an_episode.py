"""
Playing an episode
==================

An episode walks the job from the full board to an empty one. At every
decision epoch each idle agent either picks a compatible bottom-row
task or waits. Time then jumps to the next completion. The reward on
each epoch transition is the negative of the elapsed time, so the
rewards over a whole episode sum to minus the makespan.

Two choosers are compared on the same three-task job: a greedy one
that always grabs the first legal pick, and a scripted one that lets
the robot wait at the start. Waiting turns out to be the better move.
"""

from hrcsched import NOOP, episode_log_csv, parse_jobspec, run_episode, schedule_csv

TEXT = """
board 2 2
agents 1 1
task A H 2 0 0
task B R 3 0 1
task C E 4 1 0
"""

spec = parse_jobspec(TEXT)


def greedy(state, agent, actions, rng):
    for action in actions:
        if not action.is_noop:
            return action
    return NOOP


def patient(state, agent, actions, rng):
    # the robot declines at clock 0 so it can start B the moment A clears
    if agent.kind == "R" and state.clock == 0:
        return NOOP
    for action in actions:
        if not action.is_noop:
            return action
    return NOOP


for name, chooser in [("greedy", greedy), ("patient", patient)]:
    record = run_episode(spec, chooser, seed=0)
    print(f"{name}: makespan {record.makespan}, rewards {record.rewards}, "
          f"sum {sum(record.rewards)}")
    print(schedule_csv(record))

record = run_episode(spec, patient, seed=0)
print("epoch-by-epoch log for the patient run:")
print(episode_log_csv(record))
