"""Three-layer MLP surrogate: geometry + frequency -> 8 impedance components.

The network is deliberately small (one sigmoid hidden layer, linear output)
and implemented directly in numpy, including backprop, so that the gradient
can be checked against finite differences.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .network import ImpedanceMatrix, NetworkDomainError
from .oracle import GEOMETRY_BOUNDS, Z_COMPONENTS, Dataset, components_to_z, check_geometry

log = logging.getLogger(__name__)

HIDDEN_UNITS = 30


class ContractError(ValueError):
    """Shape or length mismatch in a call."""


class TrainingError(RuntimeError):
    pass


def sigmoid(x):
    return expit(x)


@dataclass
class Normalizer:
    """Min-max inputs onto [-1, 1]; z-score outputs."""

    in_lo: np.ndarray
    in_hi: np.ndarray
    out_mean: np.ndarray
    out_std: np.ndarray

    def __post_init__(self):
        self.in_lo = np.asarray(self.in_lo, dtype=float)
        self.in_hi = np.asarray(self.in_hi, dtype=float)
        self.out_mean = np.asarray(self.out_mean, dtype=float)
        self.out_std = np.asarray(self.out_std, dtype=float)
        if np.any(self.in_hi <= self.in_lo):
            raise ContractError("normalizer input bounds must satisfy lo < hi")
        if np.any(self.out_std <= 0):
            raise ContractError("normalizer output std must be positive")

    @classmethod
    def identity(cls, n_in: int, n_out: int) -> "Normalizer":
        return cls(-np.ones(n_in), np.ones(n_in), np.zeros(n_out), np.ones(n_out))

    def norm_in(self, x):
        return 2.0 * (x - self.in_lo) / (self.in_hi - self.in_lo) - 1.0

    def denorm_in(self, u):
        return self.in_lo + 0.5 * (u + 1.0) * (self.in_hi - self.in_lo)

    def norm_out(self, y):
        return (y - self.out_mean) / self.out_std

    def denorm_out(self, v):
        return self.out_mean + v * self.out_std


@dataclass
class SurrogateModel:
    w_hidden: np.ndarray    # (hidden, in)
    b_hidden: np.ndarray    # (hidden,)
    w_out: np.ndarray       # (out, hidden)
    b_out: np.ndarray       # (out,)
    normalizer: Normalizer
    seed: int | None = None
    dataset_fingerprint: str | None = None

    def __post_init__(self):
        h, n_in = self.w_hidden.shape
        n_out = self.w_out.shape[0]
        if (self.b_hidden.shape != (h,) or self.w_out.shape != (n_out, h)
                or self.b_out.shape != (n_out,)
                or self.normalizer.in_lo.shape != (n_in,)
                or self.normalizer.out_mean.shape != (n_out,)):
            raise ContractError("inconsistent layer / normalizer dimensions")

    @property
    def input_dim(self) -> int:
        return self.w_hidden.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_hidden.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w_out.shape[0]

    @property
    def band(self) -> tuple[float, float]:
        return float(self.normalizer.in_lo[-1]), float(self.normalizer.in_hi[-1])

    @classmethod
    def initialize(cls, normalizer: Normalizer, hidden_dim: int = HIDDEN_UNITS,
                   seed: int = 0) -> "SurrogateModel":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
        n_in, n_out = normalizer.in_lo.size, normalizer.out_mean.size
        rng = np.random.default_rng(seed)
        a1, a2 = 1 / np.sqrt(n_in), 1 / np.sqrt(hidden_dim)
        return cls(rng.uniform(-a1, a1, (hidden_dim, n_in)), np.zeros(hidden_dim),
                   rng.uniform(-a2, a2, (n_out, hidden_dim)), np.zeros(n_out),
                   normalizer, seed=seed)

    # -- flat parameter vector, used by the optimizers and gradient checks
    def get_params(self) -> np.ndarray:
        return np.concatenate([self.w_hidden.ravel(), self.b_hidden,
                               self.w_out.ravel(), self.b_out])

    def set_params(self, theta: np.ndarray) -> None:
        h, n_in, n_out = self.hidden_dim, self.input_dim, self.output_dim
        i = 0
        for name, shape in (("w_hidden", (h, n_in)), ("b_hidden", (h,)),
                            ("w_out", (n_out, h)), ("b_out", (n_out,))):
            size = int(np.prod(shape))
            setattr(self, name, np.array(theta[i:i + size]).reshape(shape))
            i += size

    def copy(self) -> "SurrogateModel":
        m = SurrogateModel.__new__(SurrogateModel)
        m.__dict__.update(self.__dict__)
        m.set_params(self.get_params())
        return m

    # -- impedance source protocol
    def z_matrix(self, geoms, freq) -> np.ndarray:
        """(P, 6) geometries at one frequency -> (P, 2, 2) complex."""
        check_geometry(geoms)
        self._check_band(freq)
        g = np.atleast_2d(np.asarray(geoms, dtype=float))
        x = np.column_stack([g, np.full(g.shape[0], float(freq))])
        return components_to_z(mlp_forward(self, x).values)

    def _check_band(self, freq):
        lo, hi = self.band
        if not (lo - 1e-12 <= freq <= hi + 1e-12):
            raise NetworkDomainError(f"frequency {freq} GHz outside trained band [{lo}, {hi}]")

    # -- persistence
    def to_dict(self) -> dict:
        nz = self.normalizer
        return {
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "output_dim": self.output_dim,
            "w_hidden": self.w_hidden.ravel().tolist(),
            "b_hidden": self.b_hidden.tolist(),
            "w_out": self.w_out.ravel().tolist(),
            "b_out": self.b_out.tolist(),
            "normalizer": {
                "in_lo": nz.in_lo.tolist(), "in_hi": nz.in_hi.tolist(),
                "out_mean": nz.out_mean.tolist(), "out_std": nz.out_std.tolist(),
            },
            "seed": self.seed,
            "dataset_fingerprint": self.dataset_fingerprint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurrogateModel":
        n_in, h, n_out = d["input_dim"], d["hidden_dim"], d["output_dim"]
        nz = d["normalizer"]
        return cls(np.reshape(d["w_hidden"], (h, n_in)).astype(float), np.asarray(d["b_hidden"], float),
                   np.reshape(d["w_out"], (n_out, h)).astype(float), np.asarray(d["b_out"], float),
                   Normalizer(nz["in_lo"], nz["in_hi"], nz["out_mean"], nz["out_std"]),
                   seed=d.get("seed"), dataset_fingerprint=d.get("dataset_fingerprint"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class ForwardResult(NamedTuple):
    values: np.ndarray
    clamped: bool


def _forward_normalized(model: SurrogateModel, u: np.ndarray):
    hidden = sigmoid(u @ model.w_hidden.T + model.b_hidden)
    return hidden, hidden @ model.w_out.T + model.b_out


def mlp_forward(model: SurrogateModel, x) -> ForwardResult:
    """Physical inputs -> physical outputs; one row or a (n, input_dim) batch.

    Inputs outside the normalizer bounds are clamped onto them and reported
    through ``clamped``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.input_dim:
        raise ContractError(f"expected {model.input_dim} inputs, got {x.shape[1]}")
    nz = model.normalizer
    xc = np.clip(x, nz.in_lo, nz.in_hi)
    clamped = bool(np.any(xc != x))
    _, out = _forward_normalized(model, nz.norm_in(xc))
    y = nz.denorm_out(out)
    return ForwardResult(y[0] if single else y, clamped)


def _loss_and_grad(model: SurrogateModel, u: np.ndarray, v: np.ndarray):
    """Mean squared error over all entries in normalized space, and its gradient."""
    hidden, out = _forward_normalized(model, u)
    resid = out - v
    n = resid.size
    loss = float(np.sum(resid * resid) / n)
    d_out = 2.0 * resid / n
    g_w_out = d_out.T @ hidden
    g_b_out = d_out.sum(axis=0)
    d_hidden = (d_out @ model.w_out) * hidden * (1.0 - hidden)
    g_w_hidden = d_hidden.T @ u
    g_b_hidden = d_hidden.sum(axis=0)
    grad = np.concatenate([g_w_hidden.ravel(), g_b_hidden, g_w_out.ravel(), g_b_out])
    return loss, grad


def mlp_loss(model: SurrogateModel, inputs, targets) -> float:
    u, v = _normalize_batch(model, inputs, targets)
    return float(np.mean((_forward_normalized(model, u)[1] - v) ** 2))


def mlp_gradient(model: SurrogateModel, inputs, targets) -> np.ndarray:
    """Backprop gradient of the normalized-space MSE, flattened like get_params()."""
    u, v = _normalize_batch(model, inputs, targets)
    return _loss_and_grad(model, u, v)[1]


def _normalize_batch(model, inputs, targets):
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if x.shape[0] != y.shape[0] or x.shape[1] != model.input_dim or y.shape[1] != model.output_dim:
        raise ContractError(f"batch shapes {x.shape} / {y.shape} do not match the model")
    nz = model.normalizer
    return nz.norm_in(x), nz.norm_out(y)


# ---------------------------------------------------------------- metrics

def _pair(pred, truth):
    p = np.asarray(pred, dtype=float)
    t = np.asarray(truth, dtype=float)
    if p.shape != t.shape:
        raise ContractError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ContractError("empty input")
    return p, t


def mse(pred, truth, axis=None):
    p, t = _pair(pred, truth)
    return np.mean((p - t) ** 2, axis=axis)


def mae(pred, truth, axis=None):
    p, t = _pair(pred, truth)
    return np.mean(np.abs(p - t), axis=axis)


@dataclass
class MetricsReport:
    """Per-component errors; ``normalized`` on the z-scored scale, ``physical`` in ohm."""

    normalized: dict = field(default_factory=dict)
    physical: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)

    @classmethod
    def compute(cls, model, train: tuple, test: tuple, history=None) -> "MetricsReport":
        rep = cls(history=history or {})
        nz = model.normalizer
        for split, (x, y) in (("train", train), ("test", test)):
            pred = mlp_forward(model, x).values
            for scale, a, b in (("normalized", nz.norm_out(pred), nz.norm_out(y)),
                                ("physical", pred, y)):
                m, e = mse(a, b, axis=0), mae(a, b, axis=0)
                table = getattr(rep, scale)
                for i, name in enumerate(Z_COMPONENTS):
                    table.setdefault(name, {})[split] = {"mse": float(m[i]), "mae": float(e[i])}
        return rep

    def worst(self, split="test", scale="normalized") -> tuple[float, float]:
        table = getattr(self, scale)
        return (max(v[split]["mse"] for v in table.values()),
                max(v[split]["mae"] for v in table.values()))

    def to_dict(self) -> dict:
        return {"components": list(Z_COMPONENTS), "normalized": self.normalized,
                "physical": self.physical, "history": self.history}

    def format_table(self, scale="normalized") -> str:
        table = getattr(self, scale)
        lines = [f"{'component':<10}{'train MSE':>12}{'train MAE':>12}{'test MSE':>12}{'test MAE':>12}"]
        for name in Z_COMPONENTS:
            r = table[name]
            lines.append(f"{name:<10}{r['train']['mse']:>12.5f}{r['train']['mae']:>12.5f}"
                         f"{r['test']['mse']:>12.5f}{r['test']['mae']:>12.5f}")
        return "\n".join(lines)


# ---------------------------------------------------------------- training

@dataclass(frozen=True)
class TrainConfig:
    train_fraction: float = 0.8
    epochs: int = 40
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lbfgs_iters: int = 400
    strict_outputs: bool = False
    hidden_dim: int = HIDDEN_UNITS
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1 or self.hidden_dim < 1 or self.lbfgs_iters < 0:
            raise ValueError("batch_size and hidden_dim must be positive, lbfgs_iters >= 0")


def split_groups(group: np.ndarray, train_fraction: float, seed: int):
    """Seeded split by geometry so no geometry lands in both splits."""
    ids = np.unique(group)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ids)
    n_train = int(round(train_fraction * ids.size))
    n_train = min(max(n_train, 1), ids.size - 1)
    train_ids = np.zeros(ids.max() + 1, dtype=bool)
    train_ids[perm[:n_train]] = True
    mask = train_ids[group]
    return np.flatnonzero(mask), np.flatnonzero(~mask)


def make_normalizer(ds: Dataset, train_idx, band=None, strict=False) -> Normalizer:
    """Normalizer from the training split.

    A constant output component (the oracle's purely reactive Z12, say) has
    zero spread; it is scaled by 1 ohm instead, unless ``strict`` is set.
    """
    y = ds.z[train_idx]
    std = y.std(axis=0)
    for i, s in enumerate(std):
        if not s > 1e-12 * max(1.0, abs(y[:, i]).max()):
            if strict:
                raise TrainingError(f"output component {Z_COMPONENTS[i]} is constant on the training split")
            log.warning("output component %s is constant; using unit scale", Z_COMPONENTS[i])
            std[i] = 1.0
    if band is None:
        band = (ds.freqs.min(), ds.freqs.max())
    f_lo, f_hi = band
    if f_hi <= f_lo:
        # Single-frequency data; pad so the frequency input stays well defined.
        f_lo, f_hi = f_lo - 0.5, f_hi + 0.5
    lo = np.append(GEOMETRY_BOUNDS[:, 0], f_lo)
    hi = np.append(GEOMETRY_BOUNDS[:, 1], f_hi)
    return Normalizer(lo, hi, y.mean(axis=0), std)


def train(data, cfg: TrainConfig = TrainConfig(), band=None):
    """Fit a surrogate; returns (model, MetricsReport).

    ``data`` is a Dataset or an iterable of DatasetRecord. Adam minibatch
    epochs run first, then optional full-batch L-BFGS polishing.
    """
    ds = data if isinstance(data, Dataset) else Dataset.from_records(data)
    if len(ds) < 10:
        raise TrainingError(f"need at least 10 records, got {len(ds)}")
    if np.unique(ds.group).size < 2:
        raise TrainingError("need at least 2 distinct geometries")

    train_idx, test_idx = split_groups(ds.group, cfg.train_fraction, cfg.seed)
    normalizer = make_normalizer(ds, train_idx, band, cfg.strict_outputs)
    model = SurrogateModel.initialize(normalizer, cfg.hidden_dim, cfg.seed)
    model.dataset_fingerprint = ds.fingerprint()

    x = ds.inputs
    u_all = normalizer.norm_in(x)
    v_all = normalizer.norm_out(ds.z)
    u_tr, v_tr = u_all[train_idx], v_all[train_idx]
    u_te, v_te = u_all[test_idx], v_all[test_idx]

    rng = np.random.default_rng(cfg.seed + 1)
    theta = model.get_params()
    m = np.zeros_like(theta)
    s = np.zeros_like(theta)
    step = 0
    history = {"train_loss": [], "test_loss": []}
    n = u_tr.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, g = _loss_and_grad(model, u_tr[idx], v_tr[idx])
            step += 1
            m = cfg.beta1 * m + (1 - cfg.beta1) * g
            s = cfg.beta2 * s + (1 - cfg.beta2) * g * g
            mhat = m / (1 - cfg.beta1 ** step)
            shat = s / (1 - cfg.beta2 ** step)
            theta = theta - cfg.learning_rate * mhat / (np.sqrt(shat) + cfg.eps)
            model.set_params(theta)
        history["train_loss"].append(_loss_and_grad(model, u_tr, v_tr)[0])
        history["test_loss"].append(_loss_and_grad(model, u_te, v_te)[0])
        if epoch % 20 == 0 or epoch == cfg.epochs - 1:
            log.info("epoch %d train %.3e test %.3e", epoch + 1,
                     history["train_loss"][-1], history["test_loss"][-1])

    if cfg.lbfgs_iters:
        def fun(t):
            model.set_params(t)
            return _loss_and_grad(model, u_tr, v_tr)
        res = minimize(fun, model.get_params(), jac=True, method="L-BFGS-B",
                       options={"maxiter": cfg.lbfgs_iters, "maxcor": 30,
                                "ftol": 0.0, "gtol": 0.0})
        model.set_params(res.x)
        history["lbfgs_train_loss"] = float(res.fun)
        history["lbfgs_test_loss"] = _loss_and_grad(model, u_te, v_te)[0]
        log.info("lbfgs %d its train %.3e test %.3e", res.nit, res.fun, history["lbfgs_test_loss"])

    report = MetricsReport.compute(model, (x[train_idx], ds.z[train_idx]),
                                   (x[test_idx], ds.z[test_idx]), history)
    return model, report


def predict_impedance(model: SurrogateModel, g, freq: float) -> ImpedanceMatrix:
    """Surrogate impedance at one geometry; z12 and z21 are predicted independently."""
    x = g.as_array() if hasattr(g, "as_array") else np.asarray(g, dtype=float)
    z = model.z_matrix(x, freq)[0]
    return ImpedanceMatrix.from_array(z, freq)


def model_hash(model: SurrogateModel) -> str:
    return hashlib.sha256(json.dumps(model.to_dict(), sort_keys=True).encode()).hexdigest()
