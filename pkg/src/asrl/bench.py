"""Controlled loss comparison and figure-data generators.

Everything here is deterministic given its inputs except wall-clock timings.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from asrl import metrics
from asrl.data import SplitSpec, split_hash, split_indices
from asrl.errors import DomainError
from asrl.gbdt import Dataset, GBDTModel, TrainConfig, train
from asrl.losses import ASRLConfig, ASRLState, Absolute, Asrl, Huber, Squared, asrl_refresh
from asrl.report import LOSS_ORDER, BenchReport

__all__ = [
    "BenchSetup",
    "make_loss",
    "config_hash",
    "run_bench",
    "fit_asrl_state",
    "loss_curve",
    "second_differences",
    "scatter_pairs",
    "standardize",
]


@dataclass(frozen=True)
class BenchSetup:
    train: TrainConfig = TrainConfig()
    split: SplitSpec = SplitSpec()
    asrl: ASRLConfig = ASRLConfig()
    huber_delta: float = 1.0
    standardize: bool = False


def make_loss(name: str, setup: BenchSetup):
    if name == "asrl":
        return Asrl(setup.asrl)
    if name == "squared":
        return Squared()
    if name == "absolute":
        return Absolute()
    if name == "huber":
        return Huber(setup.huber_delta)
    raise DomainError(f"unknown loss {name!r}; choose from {', '.join(LOSS_ORDER)}")


def config_hash(config: TrainConfig) -> str:
    blob = json.dumps(asdict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _fingerprint(train_set: Dataset, test_set: Dataset) -> str:
    h = hashlib.sha256()
    for arr in (train_set.features, train_set.target, test_set.features, test_set.target):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def standardize(train_set: Dataset, test_set: Dataset) -> tuple[Dataset, Dataset]:
    """Z-score features with training-set statistics (constant columns left centred)."""
    mu = train_set.features.mean(axis=0)
    sd = train_set.features.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    f = lambda d: Dataset((d.features - mu) / sd, d.target, d.feature_names)  # noqa: E731
    return f(train_set), f(test_set)


def prepare_split(data: Dataset, setup: BenchSetup):
    tr_idx, te_idx = split_indices(data.n_rows, setup.split)
    train_set, test_set = data.subset(tr_idx), data.subset(te_idx)
    if setup.standardize:
        train_set, test_set = standardize(train_set, test_set)
    return train_set, test_set, split_hash(tr_idx, te_idx)


def _run_one(name, train_set, test_set, setup):
    loss = make_loss(name, setup)
    model, secs = metrics.timed(lambda: train(train_set, setup.train, loss))
    pred = model.predict(test_set.features)
    return model, metrics.evaluate(test_set.target, pred, secs), _fingerprint(train_set, test_set)


def run_bench(
    data: Dataset,
    dataset_name: str,
    setup: BenchSetup,
    source: str = "",
    losses=LOSS_ORDER,
    jobs: int = 1,
    keep_models: dict | None = None,
) -> BenchReport:
    """Train one model per loss on a single shared split and evaluate on test."""
    train_set, test_set, s_hash = prepare_split(data, setup)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {n: pool.submit(_run_one, n, train_set, test_set, setup) for n in losses}
            outcomes = {n: f.result() for n, f in futures.items()}
    else:
        outcomes = {n: _run_one(n, train_set, test_set, setup) for n in losses}
    c_hash = config_hash(setup.train)
    meta = {
        "source": source or dataset_name,
        "n_rows": data.n_rows,
        "n_train": train_set.n_rows,
        "n_test": test_set.n_rows,
        "split.seed": setup.split.seed,
        "split.test_fraction": setup.split.test_fraction,
        "split.hash": s_hash,
        "standardize": setup.standardize,
    }
    for k, v in asdict(setup.train).items():
        meta[f"config.{k}"] = v
    meta["config.hash"] = c_hash
    meta["loss.asrl.q_low"] = setup.asrl.q_low
    meta["loss.asrl.q_high"] = setup.asrl.q_high
    meta["loss.asrl.eps"] = setup.asrl.eps
    meta["loss.huber.delta"] = setup.huber_delta
    meta["concurrent"] = jobs > 1
    report = BenchReport(
        dataset=dataset_name,
        results={n: outcomes[n][1] for n in losses},
        meta=meta,
        # data fingerprint per run: identical iff every loss saw the same split
        split_hashes={n: outcomes[n][2] for n in losses},
        config_hashes={n: c_hash for n in losses},
    )
    report.check_controlled()
    if keep_models is not None:
        keep_models.update({n: outcomes[n][0] for n in losses})
    return report


def fit_asrl_state(data: Dataset, setup: BenchSetup) -> tuple[ASRLState, GBDTModel]:
    """Train ASRL on the training split; refit the state to the final residuals."""
    train_set, _, _ = prepare_split(data, setup)
    model = train(train_set, setup.train, Asrl(setup.asrl))
    residuals = train_set.target - model.predict(train_set.features)
    return asrl_refresh(setup.asrl, residuals), model


def loss_curve(state: ASRLState, r_max: float, step: float):
    """Symmetric residual grid with ASRL value and region per point.

    Returns (r, loss, region, edge) arrays; ``edge`` marks grid points whose
    neighbour lies in a different region.
    """
    if not (r_max > 0 and step > 0):
        raise DomainError("range and step must be > 0")
    half = int(round(r_max / step))
    r = np.arange(-half, half + 1) * step
    loss = Asrl.from_state(state)
    vals = loss.value(r, np.zeros_like(r))
    region = loss.region(r, np.zeros_like(r))
    change = region[1:] != region[:-1]
    edge = np.zeros(r.size, dtype=bool)
    edge[:-1] |= change
    edge[1:] |= change
    return r, vals, region, edge


def second_differences(r, vals, region):
    """Second differences at interior points whose 3-point stencil stays in one region."""
    d2 = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    same = (region[:-2] == region[1:-1]) & (region[1:-1] == region[2:])
    return r[1:-1][same], d2[same], region[1:-1][same]


def scatter_pairs(data: Dataset, loss_name: str, setup: BenchSetup):
    train_set, test_set, _ = prepare_split(data, setup)
    model = train(train_set, setup.train, make_loss(loss_name, setup))
    return test_set.target, model.predict(test_set.features)
