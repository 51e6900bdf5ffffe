"""Rational approximation of basis vectors and single-pole decomposition.

Each complex basis vector, viewed as a function of the digital frequency, is
approximated by a proper rational polynomial in ``x = exp(-j w)``:

    R(w) = (c_0 + c_1 x + ... + c_K' x^K') / (1 + d_1 x + ... + d_K x^K)

with K' < K.  The denominator is then factored and the whole thing is
rewritten as a sum of K single-pole terms ``q_k / (1 - p_k x)`` -- exactly
the transfer function of one linear reservoir neuron with a unit-delay
feedback loop.  Poles that land on or outside the unit circle are clamped to
a configurable magnitude so the resulting filters stay summable.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NearPoleOnCircle, NoConvergence, OrderError, RepeatedPoles, SingularSystem
from .numkit import default_ridge, poly_roots, polyval_ascending, ridge_pinv_solve

RHO_MAX_DEFAULT = 0.999
POLE_SEPARATION = 1e-8


@dataclass
class RationalApprox:
    """Proper rational approximation of one basis vector.

    ``c`` are the K'+1 numerator coefficients, ``d`` the K denominator
    coefficients (the constant term 1 is implicit).  ``fit_error`` is the
    discretized integral of the squared approximation error over the fit
    grid; ``ridge_fallback`` records whether the exact least-squares solve
    had to fall back to the default ridge.
    """

    c: np.ndarray
    d: np.ndarray
    fit_error: float = 0.0
    ridge_fallback: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=complex)
        self.d = np.asarray(self.d, dtype=complex)
        if self.k_prime >= self.k:
            raise OrderError(
                f"numerator order {self.k_prime} must be < denominator order {self.k}"
            )

    @property
    def k(self):
        return len(self.d)

    @property
    def k_prime(self):
        return len(self.c) - 1


@dataclass
class PoleResidueSet:
    """Single-pole decomposition ``sum_k q_k / (1 - p_k x)``."""

    poles: np.ndarray
    residues: np.ndarray
    stabilized: np.ndarray = field(default=None)

    def __post_init__(self):
        self.poles = np.asarray(self.poles, dtype=complex)
        self.residues = np.asarray(self.residues, dtype=complex)
        if self.stabilized is None:
            self.stabilized = np.zeros(len(self.poles), dtype=bool)
        self.stabilized = np.asarray(self.stabilized, dtype=bool)
        if not len(self.poles) == len(self.residues) == len(self.stabilized):
            raise ValueError("poles, residues, stabilized must have equal length")


def fit_rational(f, k, k_prime, ridge=0.0):
    """Fit a proper rational polynomial to samples on the uniform w grid.

    ``f`` holds N samples of the target at ``w_r = 2 pi r / N``.  Row r of
    the design matrix is ``[1, x_r, ..., x_r^K', -f_r x_r, ..., -f_r x_r^K]``
    with ``x_r = exp(-j w_r)``, so the least-squares solution matches the
    linearized equation ``f_r = C(x_r) - f_r (D(x_r) - 1)``.

    The system is first solved exactly (``ridge`` as given, default 0); on a
    :class:`SingularSystem` failure it retries once with the default ridge
    floor and flags the result.
    """
    f = np.asarray(f, dtype=complex).ravel()
    n = f.size
    if k_prime >= k:
        raise OrderError(f"k_prime = {k_prime} must be < k = {k}")
    if k < 1:
        raise OrderError("denominator order k must be >= 1")
    if n < k + k_prime + 1:
        raise ValueError(f"need at least {k + k_prime + 1} samples, got {n}")
    x = np.exp(-2j * np.pi * np.arange(n) / n)
    omega1 = x[:, None] ** np.arange(0, k_prime + 1)[None, :]
    omega2 = -f[:, None] * x[:, None] ** np.arange(1, k + 1)[None, :]
    design = np.concatenate([omega1, omega2], axis=1)
    fallback = False
    try:
        coef = ridge_pinv_solve(design, f, ridge=ridge)
    except SingularSystem:
        coef = ridge_pinv_solve(design, f, ridge=default_ridge(design))
        fallback = True
    ra = RationalApprox(
        c=coef[: k_prime + 1], d=coef[k_prime + 1 :], ridge_fallback=fallback
    )
    resid = eval_rational(ra, 2.0 * np.pi * np.arange(n) / n) - f
    ra.fit_error = float(2.0 * np.pi / n * np.sum(np.abs(resid) ** 2))
    return ra


def _denominator_coeffs(ra):
    return np.concatenate([[1.0 + 0j], ra.d])


def partial_fractions(ra, n_check=256):
    """Decompose a rational approximation into single-pole terms.

    Factors ``D(x) = 1 + sum d_k x^k`` (roots ``x_k``, poles ``p_k = 1/x_k``)
    and computes residues ``q_k = C(x_k) / prod_{j != k} (1 - p_j x_k)``.
    Roots closer than the separation floor get one deterministic nudge of
    ``1e-6 e^{j index}``; if they remain clustered :class:`RepeatedPoles` is
    raised.  The reconstruction is verified against the rational form on an
    ``n_check``-point grid (away from near-circle poles) to 1e-6 relative.
    """
    if ra.k < 1:
        raise OrderError("need denominator order >= 1")
    roots = poly_roots(_denominator_coeffs(ra))
    poles = 1.0 / roots

    def min_separation(p):
        if len(p) < 2:
            return np.inf
        diff = np.abs(p[:, None] - p[None, :])
        np.fill_diagonal(diff, np.inf)
        return diff.min()

    if min_separation(poles) < POLE_SEPARATION:
        poles = poles + 1e-6 * np.exp(1j * np.arange(len(poles)))
        if min_separation(poles) < POLE_SEPARATION:
            raise RepeatedPoles(
                f"pole separation below {POLE_SEPARATION:g} after perturbation"
            )
    roots = 1.0 / poles

    residues = np.empty_like(poles)
    for k in range(len(poles)):
        others = np.delete(poles, k)
        residues[k] = polyval_ascending(ra.c, roots[k]) / np.prod(
            1.0 - others * roots[k]
        )
    prs = PoleResidueSet(poles=poles, residues=residues)

    omega = 2.0 * np.pi * np.arange(n_check) / n_check
    x = np.exp(-1j * omega)
    denom_mag = np.abs(polyval_ascending(_denominator_coeffs(ra), x))
    ok = denom_mag > 1e-3 * max(denom_mag.max(), 1e-300)
    if np.any(ok):
        direct = eval_rational(ra, omega[ok])
        summed = eval_pf(prs, omega[ok])
        scale = max(np.abs(direct).max(), 1e-300)
        worst = np.abs(direct - summed).max() / scale
        if worst > 1e-6:
            raise NoConvergence(
                f"partial fractions reconstruction error {worst:.3e} > 1e-6",
                best=prs,
            )
    return prs


def stabilize_poles(prs, rho_max=RHO_MAX_DEFAULT):
    """Clamp pole magnitudes to ``rho_max``, preserving phase.

    Residues are left untouched (no re-fit after clamping); clamped entries
    are flagged so downstream reports can count them.
    """
    if not 0.0 < rho_max < 1.0:
        raise ValueError("rho_max must be in (0, 1)")
    mags = np.abs(prs.poles)
    clamp = mags > rho_max
    scale = np.where(clamp, rho_max / np.maximum(mags, 1e-300), 1.0)
    poles = prs.poles * scale
    return PoleResidueSet(
        poles=poles,
        residues=prs.residues.copy(),
        stabilized=prs.stabilized | clamp,
    )


def eval_rational(ra, omega):
    """Evaluate the rational form C(x)/D(x) at ``x = exp(-j omega)``."""
    omega = np.asarray(omega, dtype=float)
    x = np.exp(-1j * omega)
    denom = polyval_ascending(_denominator_coeffs(ra), x)
    if np.any(np.abs(denom) <= 1e-12):
        raise NearPoleOnCircle("denominator vanishes at an evaluation point")
    out = polyval_ascending(ra.c, x) / denom
    return out if omega.ndim else complex(out)


def eval_pf(prs, omega):
    """Evaluate the pole/residue form sum q_k / (1 - p_k x)."""
    omega = np.asarray(omega, dtype=float)
    x = np.exp(-1j * omega)
    denom = 1.0 - prs.poles[None, :] * np.atleast_1d(x)[:, None]
    if np.any(np.abs(denom) <= 1e-12):
        raise NearPoleOnCircle("a pole sits on an evaluation point")
    out = np.sum(prs.residues[None, :] / denom, axis=1)
    return out if omega.ndim else complex(out[0])


def expand_pole_residue(prs):
    """Exact rational coefficients of a pole/residue set (test oracle).

    Returns a :class:`RationalApprox` with ``D(x) = prod (1 - p_k x)`` and
    the numerator accumulated symbolically, so round-trip tests can plant
    known systems.
    """
    poles = prs.poles
    d_full = np.array([1.0 + 0j])
    for p in poles:
        d_full = np.convolve(d_full, np.array([1.0, -p]))
    c_full = np.zeros(max(len(poles), 1), dtype=complex)
    for k, q in enumerate(prs.residues):
        term = np.array([q], dtype=complex)
        for j, p in enumerate(poles):
            if j != k:
                term = np.convolve(term, np.array([1.0, -p]))
        c_full[: len(term)] += term
    return RationalApprox(c=c_full, d=d_full[1:])


def pole_residue_to_dict(prs, k, k_prime, c, d, fit_error, ridge_fallback=False):
    """One weight-file entry for a fitted + decomposed basis vector."""
    as_pairs = lambda arr: [[float(z.real), float(z.imag)] for z in np.asarray(arr, dtype=complex)]
    return {
        "k": int(k),
        "k_prime": int(k_prime),
        "c": as_pairs(c),
        "d": as_pairs(d),
        "poles": as_pairs(prs.poles),
        "residues": as_pairs(prs.residues),
        "stabilized": [bool(b) for b in prs.stabilized],
        "fit_error": float(fit_error),
        "ridge_fallback": bool(ridge_fallback),
    }


def pole_residue_from_dict(doc):
    to_c = lambda pairs: np.array([complex(re, im) for re, im in pairs], dtype=complex)
    return PoleResidueSet(
        poles=to_c(doc["poles"]),
        residues=to_c(doc["residues"]),
        stabilized=np.asarray(doc["stabilized"], dtype=bool),
    )


def save_weight_entries(path, entries, meta=None):
    """Write the weight-synthesis file consumed by the ESN constructor."""
    doc = {"entries": entries, "meta": meta or {}}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)


def load_weight_entries(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return doc["entries"], doc.get("meta", {})
