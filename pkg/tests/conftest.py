import numpy as np

from qoeplan.allocator import AllocationProblem, ModelEntry, MetricCurve
from qoeplan.curve import ModelMeta, SynthCurveSpec
from qoeplan.qoe import W2


def synthetic_entry(name, hours, m0, m_inf, tau, weights=W2, t_load=10.0, t_test=0.2, length=1000):
    mae = SynthCurveSpec(m0, m_inf, tau, length=length).values()
    mse = SynthCurveSpec(1.75 * m0, 1.75 * m_inf, tau, length=length).values()
    meta = ModelMeta(name, hours, t_load=t_load, t_test=t_test)
    return ModelEntry(meta=meta, curve=MetricCurve(mae, mse, observed=length), weights=weights)


def make_problem(rows, budget, weights=W2, base_epochs=500, max_epochs=1000, epoch_step=1):
    """``rows`` are (name, hours_at_max, m0, m_inf, tau) tuples."""
    entries = tuple(synthetic_entry(*row, weights=weights, length=max_epochs) for row in rows)
    return AllocationProblem(entries, budget, base_epochs, max_epochs, epoch_step)


def random_problem(seed, n_models=None):
    """A small seeded instance with 2-4 models and a budget between the base and max costs."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5)) if n_models is None else n_models
    rows = []
    for i in range(n):
        hours = float(rng.uniform(10, 50))
        m_inf = float(rng.uniform(60, 180))
        m0 = m_inf + float(rng.uniform(150, 350))
        tau = float(rng.uniform(60, 350))
        rows.append((f"m{i}", hours, m0, m_inf, tau))
    lo = sum(r[1] for r in rows) * 0.5
    hi = sum(r[1] for r in rows)
    budget = lo + float(rng.uniform(0.15, 0.85)) * (hi - lo)
    return make_problem(rows, round(budget, 3))
