import numpy as np

from trainhyp.core import TrainSpec


def random_train(rng: np.random.Generator, n_lo=2, n_hi=30, l_hi=6.0, r_hi=8.0, flute=False) -> TrainSpec:
    N = int(rng.integers(n_lo, n_hi + 1))
    l = rng.uniform(0.05, l_hi, N)
    # repeat some values so that case boundaries l_m == h get exercised
    if N > 3:
        i, j = rng.choice(N, 2, replace=False)
        l[i] = l[j]
    r = np.zeros(N) if flute else rng.uniform(0, r_hi, N) * (rng.random(N) < 0.7)
    return TrainSpec.from_arrays(l, r)


def random_h(rng: np.random.Generator, train: TrainSpec, n: int) -> float:
    ln = float(train.l_values[n - 1])
    u = rng.random()
    if u < 0.25:
        # land exactly on a breakpoint l_m <= l_n
        cands = [float(x) for x in train.l_values if x <= ln]
        return cands[int(rng.integers(len(cands)))]
    if u < 0.3:
        return float(rng.choice([0.0, ln]))
    return float(rng.uniform(0, ln))
