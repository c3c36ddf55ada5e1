"""Count training retries for QD and QD+ under an aggressive learning rate.

Run with:
    python3 demos/robustness.py [runs]

Demonstrates:
- failure detection: non-finite loss, training coverage below 0.5, or
  more than 1% of outputs breaking lower <= point <= upper
- QD+ keeping its outputs ordered where QD needs retries
- the lambda1 x lambda2 grid with the ordering penalty off (xi = 0) and on (xi = 10)
The defaults (20 runs) take about five minutes on one core.
"""

import sys

from snmqd.data import make_trials, standardize, synth_sinusoid
from snmqd.ensemble import EnsembleConfig, EnsembleTrainingError, train_ensemble
from snmqd.harness import failure_fraction, run_sensitivity
from snmqd.neuralnet import TrainConfig

STRESS = dict(learning_rate=0.1, epochs=200)


def count_retries(loss, runs):
    retries, failed = 0, 0
    for run in range(runs):
        ds = synth_sinusoid(600, seed=run)
        split = make_trials(ds, 1, 0.1, run)[0]
        X, y, _ = standardize(ds, "train_stats", split.train)
        cfg = EnsembleConfig(master_seed=run, train=TrainConfig(loss=loss, **STRESS))
        try:
            retries += train_ensemble(X[split.train], y[split.train], cfg).retries
        except EnsembleTrainingError as exc:
            failed += 1
            retries += sum(sum(1 for _, why in a if why is not None) for a in exc.attempts)
    return retries, failed


def main(runs=20):
    runs = int(runs)
    print(f"{runs} ensembles of 5, lr {STRESS['learning_rate']}, {STRESS['epochs']} epochs, up to 5 retries per member")
    for loss in ("qd_plus", "qd"):
        retries, failed = count_retries(loss, runs)
        print(f"  {loss:<8} retries {retries:>4}  ensembles that gave up {failed}")
    print()
    grid = (0.0, 0.25, 0.5, 0.75, 0.975)
    cells = run_sensitivity(synth_sinusoid(600, seed=0), grid, grid, (0.0, 10.0), TrainConfig(), seed=0)
    for xi in (0.0, 10.0):
        print(f"  grid failure fraction at xi = {xi:g}: {failure_fraction(cells, xi):.2f}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
