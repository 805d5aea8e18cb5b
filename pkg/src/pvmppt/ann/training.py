"""Training loop, validation metrics and architecture search."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import _backend
from .network import DivergenceError, MlpNetwork

log = logging.getLogger(__name__)

ERROR_BIN = 0.002


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 14
    seed: int = 0
    shuffle_each_epoch: bool = True

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class Candidate:
    layer_sizes: tuple[int, ...] = (3, 6, 3, 1)
    activation: str = "tanh"
    output_activation: str = "tanh"

    @property
    def label(self) -> str:
        sizes = "-".join(str(s) for s in self.layer_sizes)
        return f"{sizes}:{self.activation}/{self.output_activation}"


DEFAULT_CANDIDATES = (
    Candidate((3, 6, 3, 1), "tanh", "tanh"),
    Candidate((3, 6, 3, 1), "linear", "linear"),
    Candidate((3, 6, 3, 1), "gelu", "tanh"),
    Candidate((3, 6, 3, 1), "sigmoid", "tanh"),
    Candidate((3, 6, 3, 1), "softsign", "tanh"),
)


def _kernel_for(net: MlpNetwork):
    if net.hidden_activation.elementwise and net.output_activation.elementwise:
        return _backend.kernels
    return _backend.fallback


def train(net: MlpNetwork, X, D, config: TrainConfig, kernels=None):
    """Online training for ``config.epochs`` passes.

    Returns a trained copy of ``net`` and the training-set MSE (mean of half
    squared error) measured after every epoch.
    """
    net = net.copy()
    X = np.ascontiguousarray(X, dtype=float)
    D = np.ascontiguousarray(np.asarray(D, dtype=float).reshape(len(X), -1))
    sizes = np.asarray(net.layer_sizes, dtype=np.int64)
    kern = kernels or _kernel_for(net)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(X)) if config.shuffle_each_epoch else np.arange(len(X))
        bad, _ = kern.train_epoch(
            net.params,
            sizes,
            X,
            D,
            np.ascontiguousarray(order, dtype=np.int64),
            float(config.learning_rate),
            net.hidden_activation.code,
            net.output_activation.code,
        )
        if bad >= 0 or not np.all(np.isfinite(net.params)):
            idx = int(order[bad]) if bad >= 0 else None
            raise DivergenceError(
                f"training diverged in epoch {epoch} at sample {idx}", sample_index=idx, epoch=epoch
            )
        history.append(mean_loss(net, X, D))
        log.debug("epoch %d mse %.6g", epoch, history[-1])
    return net, np.array(history)


def mean_loss(net: MlpNetwork, X, D) -> float:
    e = np.asarray(D, dtype=float).reshape(len(X), -1) - net.predict(X)
    return float(np.mean(0.5 * e * e))


@dataclass
class ValidationReport:
    mse: float
    predicted: np.ndarray
    desired: np.ndarray
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    n_within: int

    @property
    def mse_percent(self) -> float:
        return 100.0 * self.mse

    @property
    def abs_error(self) -> np.ndarray:
        return np.abs(self.desired - self.predicted)

    @property
    def fraction_within(self) -> float:
        return self.n_within / len(self.desired)


def validate(net: MlpNetwork, X, D, bins: int = 50, within: float = ERROR_BIN) -> ValidationReport:
    if len(X) == 0:
        raise ValueError("empty validation set")
    desired = np.asarray(D, dtype=float).reshape(len(X), -1)[:, 0]
    predicted = net.predict(X)[:, 0]
    e = desired - predicted
    abs_e = np.abs(e)
    top = max(float(abs_e.max()), within)
    counts, edges = np.histogram(abs_e, bins=bins, range=(0.0, top))
    return ValidationReport(
        mse=float(np.mean(0.5 * e * e)),
        predicted=predicted,
        desired=desired,
        hist_edges=edges,
        hist_counts=counts,
        n_within=int(np.count_nonzero(abs_e < within)),
    )


@dataclass
class CandidateResult:
    index: int
    candidate: Candidate
    n_params: int
    network: MlpNetwork | None = None
    history: np.ndarray | None = None
    report: ValidationReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SearchResult:
    ranked: list[CandidateResult]
    failed: list[CandidateResult] = field(default_factory=list)

    @property
    def best(self) -> CandidateResult:
        return self.ranked[0]


class SearchError(RuntimeError):
    def __init__(self, failures):
        causes = "; ".join(f"{r.candidate.label}: {r.error}" for r in failures)
        super().__init__(f"all candidates failed ({causes})")
        self.failures = failures


def architecture_search(train_set, validation_set, candidates=DEFAULT_CANDIDATES, config=TrainConfig(),
                        rank_by: str = "mse") -> SearchResult:
    """Train and validate each candidate, then rank them.

    ``rank_by="mse"`` sorts by validation MSE; ``"within"`` sorts by the
    share of predictions inside the 0.002 error bin. Ties fall to fewer
    parameters, then to candidate order.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    X_tr, D_tr = train_set
    X_va, D_va = validation_set
    results = []
    for i, cand in enumerate(candidates):
        cand = cand if isinstance(cand, Candidate) else Candidate(*cand)
        net = MlpNetwork.initialize(cand.layer_sizes, cand.activation, cand.output_activation, config.seed)
        res = CandidateResult(i, cand, net.n_params)
        try:
            res.network, res.history = train(net, X_tr, D_tr, config)
            res.report = validate(res.network, X_va, D_va)
            if not np.isfinite(res.report.mse):
                res.error = "non-finite validation error"
        except DivergenceError as exc:
            res.error = str(exc)
        log.info("candidate %s: %s", cand.label, res.error or f"mse {res.report.mse_percent:.4f}%")
        results.append(res)

    good = [r for r in results if r.ok]
    bad = [r for r in results if not r.ok]
    if not good:
        raise SearchError(bad)
    if rank_by == "mse":
        key = lambda r: (r.report.mse, r.n_params, r.index)  # noqa: E731
    elif rank_by == "within":
        key = lambda r: (-r.report.fraction_within, r.n_params, r.index)  # noqa: E731
    else:
        raise ValueError(f"unknown ranking rule {rank_by!r}")
    return SearchResult(sorted(good, key=key), bad)
