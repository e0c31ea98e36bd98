"""
Training a policy on one job
============================

Self-play training alternates between generating episodes with the
current network steering the tree search and fitting the network to
what the search found. Every decision contributes one example: the
input is the board image, the policy target is the visit distribution
over columns, and the value target is the remaining time to finish
(negated, so later states are closer to zero).

Three iterations on a small job are enough to watch the loss fall and
the best makespan settle. The run is fully seeded, so repeating it
reproduces the same table byte for byte.
"""

from hrcsched import TrainingConfig, parse_jobspec, training_log_csv, training_loop

TEXT = """
board 3 3
agents 1 1
task fit    H 4 0 0
task weld   R 5 1 0
task gum    R 3 2 0
task screw  R 4 0 1
task check  E 2 1 1
task polish H 3 0 2
"""

spec = parse_jobspec(TEXT)
config = TrainingConfig(iterations=3, episodes=8, seed=42)

reports, params = training_loop(spec, config)

print(training_log_csv(reports))
print("best makespan over the run:", min(r.best_makespan for r in reports))
print("trained tensors:", sorted(params))
