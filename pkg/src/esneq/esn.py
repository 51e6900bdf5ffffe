"""Echo state network: state recursion, initialization, readout training.

The reservoir runs the classic update
``x[n] = act(W_res x[n-1] + W_in u[n])`` from a zero initial state; only the
linear readout ``W_out`` is ever trained (regularized least squares).  Two
initializations exist: the conventional random one (uniform complex entries,
sparsified, rescaled to a target spectral radius) and the synthesized one
that places single-pole filters from a pole/residue decomposition on the
diagonal of the reservoir.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DegenerateReservoir, ReadoutMissing, UnstablePole
from .numkit import default_ridge, ridge_pinv_solve, spectral_radius
from .ratfit import RHO_MAX_DEFAULT

ACTIVATIONS = ("linear", "split_tanh")


@dataclass
class EsnModel:
    """Weights and metadata of one ESN.

    ``w_res_diag`` caches the reservoir diagonal when the reservoir is
    diagonal by construction (the synthesized case) so the state recursion
    can skip the dense matrix product.
    """

    w_in: np.ndarray
    w_res: np.ndarray
    activation: str = "linear"
    init_kind: str = "random"
    w_out: Optional[np.ndarray] = None
    train_mse: Optional[float] = None
    w_res_diag: Optional[np.ndarray] = None

    @property
    def n_nodes(self):
        return self.w_in.shape[0]

    @property
    def d_in(self):
        return self.w_in.shape[1]


@dataclass
class StateTrajectory:
    """Reservoir states over time: column n is the state after input n."""

    states: np.ndarray
    washout: int = 0

    @property
    def length(self):
        return self.states.shape[1]


def init_random(n_nodes, d_in, d_out, spectral_radius_target, sparsity, rng):
    """Conventional random ESN initialization.

    ``W_in`` and ``W_res`` entries are i.i.d. U(-1,1) + jU(-1,1); each
    reservoir entry is then zeroed with probability ``sparsity`` and the
    matrix rescaled so its spectral radius hits the target.  Draw order
    (W_in, W_res, mask) is fixed for reproducibility.
    """
    if not 0.0 < spectral_radius_target < 1.0:
        raise ValueError("spectral radius target must be in (0, 1)")
    if not 0.0 <= sparsity < 1.0:
        raise ValueError("sparsity must be in [0, 1)")
    if d_out != 1 or d_in != 1:
        raise ValueError("only scalar complex input/output streams are supported")
    w_in = rng.uniform(-1.0, 1.0, (n_nodes, d_in)) + 1j * rng.uniform(
        -1.0, 1.0, (n_nodes, d_in)
    )
    w_res = rng.uniform(-1.0, 1.0, (n_nodes, n_nodes)) + 1j * rng.uniform(
        -1.0, 1.0, (n_nodes, n_nodes)
    )
    if sparsity > 0.0:
        w_res[rng.uniform(0.0, 1.0, (n_nodes, n_nodes)) < sparsity] = 0.0
    rho = spectral_radius(w_res)
    if rho < 1e-12:
        raise DegenerateReservoir(
            f"sparsified reservoir has spectral radius {rho:.3e}; cannot rescale"
        )
    w_res *= spectral_radius_target / rho
    return EsnModel(w_in=w_in, w_res=w_res, init_kind="random")


def init_optimum(pole_residue_sets, rho_max=RHO_MAX_DEFAULT, activation="linear"):
    """Synthesized ESN from M pole/residue sets.

    The reservoir is diagonal: neuron (m, k) carries pole ``p_{m,k}`` with
    input weight ``q_{m,k}``, stacked m-major (all poles of set 0 first).
    Every pole must already satisfy ``|p| <= rho_max``.
    """
    poles, residues = [], []
    for prs in pole_residue_sets:
        mags = np.abs(prs.poles)
        if np.any(mags > rho_max + 1e-12):
            raise UnstablePole(
                f"pole magnitude {mags.max():.6f} exceeds rho_max = {rho_max}"
            )
        poles.append(prs.poles)
        residues.append(prs.residues)
    diag = np.concatenate(poles)
    w_in = np.concatenate(residues).reshape(-1, 1)
    return EsnModel(
        w_in=w_in,
        w_res=np.diag(diag),
        activation=activation,
        init_kind="optimum",
        w_res_diag=diag,
    )


def _apply_activation(pre, activation):
    if activation == "linear":
        return pre
    if activation == "split_tanh":
        return np.tanh(pre.real) + 1j * np.tanh(pre.imag)
    raise ValueError(f"unknown activation {activation!r}")


def run_states(model, inputs, washout=0):
    """Run the reservoir over a scalar complex input stream.

    The initial state is zero.  Returns the full state trajectory; the
    ``washout`` count is carried along for the training step.
    """
    u = np.asarray(inputs, dtype=complex).ravel()
    n, t_len = model.n_nodes, u.size
    if washout >= t_len:
        raise ValueError(f"washout {washout} must be < sequence length {t_len}")
    states = np.empty((n, t_len), dtype=complex)
    x = np.zeros(n, dtype=complex)
    w_in = model.w_in[:, 0]
    diag = model.w_res_diag
    if diag is not None:
        for i in range(t_len):
            x = _apply_activation(diag * x + w_in * u[i], model.activation)
            states[:, i] = x
    else:
        w_res = model.w_res
        for i in range(t_len):
            x = _apply_activation(w_res @ x + w_in * u[i], model.activation)
            states[:, i] = x
    return StateTrajectory(states=states, washout=washout)


def train_readout(model, trajectory, targets, ridge=None):
    """Least-squares readout training; returns a new model with W_out set.

    Minimizes ``||X^T w - y||^2 (+ ridge ||w||^2)`` over the post-washout
    columns of the trajectory.  ``ridge=None`` applies the package-default
    ridge floor; pass 0 for the exact pseudoinverse solution.
    """
    y = np.asarray(targets, dtype=complex).ravel()
    if y.size != trajectory.length:
        raise ValueError(
            f"targets length {y.size} != trajectory length {trajectory.length}"
        )
    w0 = trajectory.washout
    design = trajectory.states[:, w0:].T
    rhs = y[w0:]
    if ridge is None:
        ridge = default_ridge(design)
    w_out = ridge_pinv_solve(design, rhs, ridge=ridge)
    mse = float(np.mean(np.abs(design @ w_out - rhs) ** 2))
    return replace(model, w_out=w_out.reshape(1, -1), train_mse=mse)


def predict(model, inputs):
    """Readout output over a fresh run of the reservoir (zero initial state)."""
    if model.w_out is None:
        raise ReadoutMissing("train_readout must run before predict")
    traj = run_states(model, inputs)
    return (model.w_out @ traj.states)[0]


def _complex_pairs(arr):
    return [[float(z.real), float(z.imag)] for z in np.asarray(arr).ravel()]


def _from_pairs(pairs, shape):
    flat = np.array([complex(re, im) for re, im in pairs], dtype=complex)
    return flat.reshape(shape)


def model_to_dict(model):
    """JSON-compatible form of a model (trained or not).

    Diagonal reservoirs store only their diagonal; the readout is included
    when trained.
    """
    doc = {
        "n_nodes": int(model.n_nodes),
        "d_in": int(model.d_in),
        "activation": model.activation,
        "init_kind": model.init_kind,
        "w_in": _complex_pairs(model.w_in),
    }
    if model.w_res_diag is not None:
        doc["w_res_diag"] = _complex_pairs(model.w_res_diag)
    else:
        doc["w_res"] = _complex_pairs(model.w_res)
    if model.w_out is not None:
        doc["w_out"] = _complex_pairs(model.w_out)
        doc["train_mse"] = float(model.train_mse) if model.train_mse is not None else None
    return doc


def model_from_dict(doc):
    n = int(doc["n_nodes"])
    d_in = int(doc["d_in"])
    w_in = _from_pairs(doc["w_in"], (n, d_in))
    if "w_res_diag" in doc:
        diag = _from_pairs(doc["w_res_diag"], (n,))
        w_res = np.diag(diag)
    else:
        diag = None
        w_res = _from_pairs(doc["w_res"], (n, n))
    w_out = _from_pairs(doc["w_out"], (1, n)) if "w_out" in doc else None
    return EsnModel(
        w_in=w_in,
        w_res=w_res,
        activation=doc["activation"],
        init_kind=doc["init_kind"],
        w_out=w_out,
        train_mse=doc.get("train_mse"),
        w_res_diag=diag,
    )
