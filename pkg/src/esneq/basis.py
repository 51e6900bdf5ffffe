"""Orthonormal basis synthesis for the frequency-domain channel inverse.

The pipeline: stack real/imaginary parts of the sampled channel inverses,
form their empirical covariance (or correlation) matrix, eigendecompose, and
complexify the leading eigenvectors into an orthonormal complex basis.  The
eigenvalue spectrum doubles as the measurement device for the effective
dimensionality (epsilon-rank) of the channel-inverse ensemble.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NoConvergence
from .numkit import sym_eig


@dataclass
class CovarianceEstimate:
    """Empirical second moments of real-stacked sample vectors.

    ``sigma`` is the 2N x 2N matrix (1/n_obs normalization); ``mean_tilde``
    the empirical mean, kept even in uncentered mode.
    """

    sigma: np.ndarray
    n_obs: int
    mean_tilde: np.ndarray
    centered: bool


@dataclass
class BasisSet:
    """Complex orthonormal basis of the channel-inverse space.

    ``f`` holds the N x M basis columns; ``eigenvalues`` the full descending
    2N spectrum of the real-stacked problem; ``mean`` the empirical complex
    mean of the ensemble (used for reconstruction only in centered mode).
    """

    f: np.ndarray
    eigenvalues: np.ndarray
    m: int
    n: int
    centered: bool
    mean: np.ndarray


def stack_real_imag(v):
    """[Re(v); Im(v)] as one real vector of twice the length."""
    v = np.asarray(v, dtype=complex)
    return np.concatenate([v.real, v.imag])


def unstack_real_imag(r):
    """Inverse of :func:`stack_real_imag`."""
    r = np.asarray(r, dtype=float)
    if r.size % 2:
        raise ValueError("stacked vector must have even length")
    n = r.size // 2
    return r[:n] + 1j * r[n:]


def empirical_covariance(samples, centered=False):
    """Empirical covariance (centered) or correlation (uncentered) matrix.

    Parameters
    ----------
    samples : (n_obs, 2N) array_like or sequence of 1-d vectors
    centered : bool
        If True, subtract the empirical mean first.  Both modes use the
        1/n_obs normalization.
    """
    try:
        mat = np.asarray(samples, dtype=float)
    except ValueError as exc:
        raise LengthMismatch(f"sample vectors have mixed lengths: {exc}") from exc
    if mat.ndim != 2:
        lengths = sorted({np.asarray(s).size for s in samples})
        raise LengthMismatch(f"sample vectors have mixed lengths {lengths}")
    n_obs, dim = mat.shape
    if n_obs < 2:
        raise ValueError("need at least 2 samples")
    mean = mat.mean(axis=0)
    data = mat - mean if centered else mat
    sigma = data.T @ data / n_obs
    if n_obs < dim:
        warnings.warn(
            f"covariance from {n_obs} samples in dimension {dim} is rank-deficient",
            stacklevel=2,
        )
    return CovarianceEstimate(
        sigma=sigma, n_obs=n_obs, mean_tilde=mean, centered=centered
    )


def optimum_basis(cov, m):
    """Leading-M complex basis from the real-stacked covariance.

    Eigendecomposes ``cov.sigma``, complexifies the M dominant eigenvectors
    (first half real part, second half imaginary part), then re-orthonormalizes
    the complex columns with modified Gram-Schmidt: real-orthonormal vectors
    are not automatically complex-orthonormal, and for near-circular ensembles
    eigenvector pairs can complexify to nearly parallel columns.
    """
    two_n = cov.sigma.shape[0]
    n = two_n // 2
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}], got {m}")
    eig = sym_eig(cov.sigma)
    cols = eig.eigenvectors[:, :m]
    f = cols[:n, :] + 1j * cols[n:, :]

    for j in range(m):
        u = f[:, j].copy()
        norm0 = np.linalg.norm(u)
        for k in range(j):
            u -= (f[:, k].conj() @ u) * f[:, k]
        norm = np.linalg.norm(u)
        if norm < 1e-12 * max(norm0, 1.0):
            raise NoConvergence(
                f"complexified basis column {j} is numerically dependent on "
                "earlier columns; reduce m"
            )
        f[:, j] = u / norm
    return BasisSet(
        f=f,
        eigenvalues=eig.eigenvalues,
        m=m,
        n=n,
        centered=cov.centered,
        mean=unstack_real_imag(cov.mean_tilde),
    )


def project_reconstruct(basis, v):
    """Project ``v`` on the basis and reconstruct.

    Returns ``(u, v_hat, err)`` with ``u = F^H v`` the latent vector,
    ``v_hat = F u`` the reconstruction and ``err = ||v - v_hat||^2``.  In
    centered mode the mean is removed before projection and restored after.
    """
    v = np.asarray(v, dtype=complex)
    if v.size != basis.n:
        raise LengthMismatch(f"vector length {v.size} != basis N {basis.n}")
    work = v - basis.mean if basis.centered else v
    u = basis.f.conj().T @ work
    v_hat = basis.f @ u
    if basis.centered:
        v_hat = v_hat + basis.mean
    err = float(np.sum(np.abs(v - v_hat) ** 2))
    return u, v_hat, err


def epsilon_rank(eigenvalues, eps):
    """Number of eigenvalues strictly greater than ``eps``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return int(np.sum(np.asarray(eigenvalues) > eps))


def default_epsilon(eigenvalues, sigma0):
    """Reporting default: 10 * sigma0^4 * (largest eigenvalue scale)."""
    eigenvalues = np.asarray(eigenvalues)
    top = float(eigenvalues[0]) if eigenvalues.size else 0.0
    return 10.0 * sigma0 ** 4 * top


def basis_to_dict(basis):
    """JSON-compatible dict form of a basis (the ratfit input contract)."""
    return {
        "n": int(basis.n),
        "m": int(basis.m),
        "centered": bool(basis.centered),
        "eigenvalues": [float(x) for x in basis.eigenvalues],
        "f": [[[float(z.real), float(z.imag)] for z in basis.f[:, j]]
              for j in range(basis.m)],
        "mean": [[float(z.real), float(z.imag)] for z in basis.mean],
    }


def basis_from_dict(doc):
    f = np.array(
        [[complex(re, im) for re, im in col] for col in doc["f"]], dtype=complex
    ).T
    mean = np.array([complex(re, im) for re, im in doc["mean"]], dtype=complex)
    return BasisSet(
        f=f,
        eigenvalues=np.asarray(doc["eigenvalues"], dtype=float),
        m=int(doc["m"]),
        n=int(doc["n"]),
        centered=bool(doc["centered"]),
        mean=mean,
    )


def save_basis(path, basis):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(basis_to_dict(basis), fh, sort_keys=True, indent=1)


def load_basis(path):
    with open(path, encoding="utf-8") as fh:
        return basis_from_dict(json.load(fh))
