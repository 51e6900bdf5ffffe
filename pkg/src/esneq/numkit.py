"""Complex linear algebra and polynomial numerics.

Self-contained numeric substrate for the rest of the package: a symmetric
eigensolver, a ridge-regularized complex least-squares solver, a simultaneous
polynomial root finder (Aberth iteration), sampled frequency responses, and a
spectral-radius estimator.  Everything operates on plain numpy arrays
(complex128 / float64); all functions are pure and thread-safe.

All tolerances live in a single :class:`Tolerances` record so tests can
tighten them in one place.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NonSymmetric, SingularSystem


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances shared by the numkit routines."""

    symmetry_rtol: float = 1e-10      # relative asymmetry accepted by sym_eig
    eig_residual_rtol: float = 1e-8   # ||A q - lambda q|| / ||A||_F
    max_condition: float = 1e12       # cond(A^H A) cap for ridge = 0 solves
    root_residual_rtol: float = 1e-8  # |p(root)| / max|coeff|
    root_max_iter: int = 500
    radius_rtol: float = 1e-6
    radius_max_iter: int = 2000
    ridge_scale: float = 1e-6         # default ridge = scale * tr(A^H A) / cols


TOL = Tolerances()


@dataclass
class EigenResult:
    """Eigendecomposition of a real symmetric matrix.

    ``eigenvalues`` are sorted descending; column ``i`` of ``eigenvectors``
    belongs to ``eigenvalues[i]`` and has unit 2-norm.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eig(a, tol=TOL):
    """Eigendecomposition of a real symmetric matrix, descending order.

    Parameters
    ----------
    a : (n, n) array_like of float
        Symmetric matrix.  Asymmetry up to ``tol.symmetry_rtol`` relative to
        the largest entry is tolerated (and symmetrized away).

    Returns
    -------
    EigenResult

    Raises
    ------
    NonSymmetric
        If the symmetry check fails.
    NoConvergence
        If the underlying iteration does not converge.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"sym_eig needs a square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > tol.symmetry_rtol * scale:
        raise NonSymmetric(
            f"matrix is not symmetric within {tol.symmetry_rtol:g} relative"
        )
    sym = 0.5 * (a + a.T)
    try:
        w, q = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(f"eigensolver failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    return EigenResult(eigenvalues=w[order], eigenvectors=q[:, order])


def default_ridge(a, tol=TOL):
    """Default ridge floor for a design matrix: scale * tr(A^H A) / cols."""
    a = np.asarray(a)
    return tol.ridge_scale * float(np.sum(np.abs(a) ** 2)) / a.shape[1]


def ridge_pinv_solve(a, b, ridge=0.0, tol=TOL):
    """Solve the (ridge-regularized) complex least-squares problem.

    Returns ``x`` minimizing ``||A x - b||^2 + ridge ||x||^2``, i.e. the
    solution of ``(A^H A + ridge I) x = A^H b``.  Computed through the SVD of
    ``A`` so that ``ridge = 0`` reproduces the pseudoinverse solution.

    Raises
    ------
    SingularSystem
        If ``ridge == 0`` and cond(A) exceeds ``tol.max_condition`` (the
        pseudoinverse is computed from the SVD of ``A`` itself, so that is
        the conditioning that governs the solution's accuracy).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1:
        raise ValueError("design matrix must be 2-d with at least one row")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"rhs length {b.shape[0]} != rows {a.shape[0]}")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if ridge == 0.0:
        smin = s[-1] if s[-1] > 0 else 0.0
        cond = np.inf if smin == 0.0 else s[0] / smin
        if cond > tol.max_condition:
            raise SingularSystem(
                f"cond(A) = {cond:.3e} exceeds {tol.max_condition:g}; "
                "pass a ridge > 0"
            )
        gain = 1.0 / s
    else:
        gain = s / (s * s + ridge)
    return (vh.conj().T * gain) @ (u.conj().T @ b)


def polyval_ascending(coeffs, x):
    """Evaluate a polynomial with ascending coefficients at ``x`` (Horner)."""
    c = np.asarray(coeffs)
    out = np.full_like(np.asarray(x, dtype=complex), c[-1], dtype=complex)
    for k in range(len(c) - 2, -1, -1):
        out = out * x + c[k]
    return out


def poly_roots(coeffs, tol=TOL):
    """All roots of a polynomial, by Aberth simultaneous iteration.

    Parameters
    ----------
    coeffs : array_like of complex
        Ascending powers, constant term first.  The leading coefficient must
        have magnitude > 1e-12.

    Returns
    -------
    (deg,) ndarray of complex roots (unordered).

    Raises
    ------
    NoConvergence
        If the residual target is not met within ``tol.root_max_iter``
        passes; the best iterate is attached.

    Notes
    -----
    Initial guesses sit on a circle of radius ``|c0/c_deg|**(1/deg)``
    offset by a fixed angle, so the routine is fully deterministic.
    Acceptance is backward-stable: each root must satisfy
    ``|p(z)| <= rtol * sum_k |c_k| |z|^k``, which for roots of order unity
    coincides with an absolute ``rtol * max|coeff|`` bound but remains
    attainable in double precision for far-out roots (tiny leading
    coefficients), where the plain absolute bound cannot be reached.
    """
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size < 2:
        raise ValueError("need degree >= 1")
    if abs(c[-1]) <= 1e-12:
        raise ValueError("leading coefficient magnitude must exceed 1e-12")

    # Exact zero constant terms are roots at the origin; peel them off.
    n_zero = 0
    while c[0] == 0.0 and c.size > 2:
        c = c[1:]
        n_zero += 1
    if c[0] == 0.0:  # degree 1 with zero constant
        return np.zeros(n_zero + 1, dtype=complex)

    deg = c.size - 1
    coeff_scale = np.abs(c).max()
    deriv = c[1:] * np.arange(1, deg + 1)

    radius = (abs(c[0]) / abs(c[-1])) ** (1.0 / deg)
    if not np.isfinite(radius) or radius < 1e-8:
        radius = 1.0
    angles = 2.0 * np.pi * np.arange(deg) / deg + 0.4
    z = radius * np.exp(1j * angles)

    abs_c = np.abs(c)
    powers = np.arange(deg + 1)

    def rel_residual(z_vals):
        pz = polyval_ascending(c, z_vals)
        envelope = (np.abs(z_vals)[:, None] ** powers[None, :]) @ abs_c
        return np.abs(pz) / np.maximum(envelope, coeff_scale)

    best = z.copy()
    best_res = np.inf
    for _ in range(tol.root_max_iter):
        res = rel_residual(z).max()
        if res < best_res:
            best_res = res
            best = z.copy()
        if res <= tol.root_residual_rtol:
            roots = z
            if n_zero:
                roots = np.concatenate([roots, np.zeros(n_zero, dtype=complex)])
            return roots
        pz = polyval_ascending(c, z)
        dpz = polyval_ascending(deriv, z)
        dpz = np.where(np.abs(dpz) < 1e-300, 1e-300, dpz)
        newton = pz / dpz
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        sums = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - newton * sums
        denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
        z = z - newton / denom

    if n_zero:
        best = np.concatenate([best, np.zeros(n_zero, dtype=complex)])
    raise NoConvergence(
        f"root finder residual {best_res:.3e} above target "
        f"{tol.root_residual_rtol:.3e} after {tol.root_max_iter} iterations",
        best=best,
    )


def dft_response(h, n):
    """Frequency response of a tap vector at the n-point DFT grid.

    Element ``k`` is ``sum_l h[l] * exp(-2j pi k l / n)``; identical (to
    machine precision) to the zero-padded FFT, which is how it is computed.
    """
    h = np.asarray(h, dtype=complex).ravel()
    if n < h.size:
        raise ValueError(f"n = {n} must be >= number of taps {h.size}")
    return np.fft.fft(h, n=n)


def spectral_radius(w, tol=TOL):
    """Largest eigenvalue magnitude of a square matrix.

    Diagonal matrices short-circuit to ``max |diag|``.  Otherwise a
    Ritz-restarted power (Arnoldi) iteration runs: a small Krylov basis is
    grown by repeated multiplication, the dominant Ritz value is extracted,
    and the iteration restarts from the dominant Ritz vector until the
    estimate is stable to ``tol.radius_rtol`` (a plain power iteration stalls
    on the near-degenerate edge spectra of random reservoirs).  Restarts fall
    back to a fresh deterministic random vector when the Ritz vector
    degenerates.

    Raises
    ------
    NoConvergence
        If no stable estimate emerges within the ``tol.radius_max_iter``
        matrix-vector product budget (best estimate attached).
    """
    w = np.asarray(w, dtype=complex)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("spectral_radius needs a square matrix")
    n = w.shape[0]
    if n == 1:
        return float(abs(w[0, 0]))
    if np.count_nonzero(w - np.diag(np.diagonal(w))) == 0:
        return float(np.abs(np.diagonal(w)).max())

    rng = np.random.default_rng(0x5EED)
    budget = tol.radius_max_iter
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v0 /= np.linalg.norm(v0)
    prev = None
    target = None  # Ritz value being tracked across restarts
    switches = 0
    scale = max(np.abs(w).max(), 1e-300)
    while budget > 0:
        m = min(n, 48)
        basis = np.empty((n, m + 1), dtype=complex)
        hess = np.zeros((m + 1, m), dtype=complex)
        basis[:, 0] = v0
        k_eff, invariant = m, False
        for k in range(m):
            budget -= 1
            vec = w @ basis[:, k]
            for j in range(k + 1):  # modified Gram-Schmidt, one refinement
                hess[j, k] = basis[:, j].conj() @ vec
                vec -= hess[j, k] * basis[:, j]
            for j in range(k + 1):
                corr = basis[:, j].conj() @ vec
                hess[j, k] += corr
                vec -= corr * basis[:, j]
            hess[k + 1, k] = np.linalg.norm(vec)
            if hess[k + 1, k] < 1e-13 * scale:
                k_eff, invariant = k + 1, True
                break
            basis[:, k + 1] = vec / hess[k + 1, k]
        ritz_vals, ritz_vecs = np.linalg.eig(hess[:k_eff, :k_eff])
        if invariant:
            return float(np.abs(ritz_vals).max())  # exact invariant subspace
        # For real matrices the dominant conjugate partners trade places in
        # the raw magnitude ordering while they converge; follow one partner
        # (magnitudes agree) instead of the per-cycle argmax.  If some other
        # Ritz value is decisively larger, the initial lock was wrong: switch
        # to it and restart the convergence test.
        if target is None:
            top = int(np.argmax(np.abs(ritz_vals)))
        else:
            top = int(np.argmin(np.abs(ritz_vals - target)))
            cand = int(np.argmax(np.abs(ritz_vals)))
            # Latch after a few switches: persistent trading means the
            # contenders' magnitudes agree to the switching margin anyway.
            if switches < 8 and abs(ritz_vals[cand]) > abs(ritz_vals[top]) * (1.0 + 2e-3):
                top, prev = cand, None
                switches += 1
        target = ritz_vals[top]
        est = float(abs(target))
        if prev is not None and abs(est - prev) <= tol.radius_rtol * max(est, 1e-300):
            return est
        prev = est
        v0 = basis[:, :k_eff] @ ritz_vecs[:, top]
        norm = np.linalg.norm(v0)
        if not np.isfinite(norm) or norm < 1e-150:
            v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            norm = np.linalg.norm(v0)
        v0 /= norm
    raise NoConvergence(
        f"spectral radius estimate did not stabilize (best {prev})", best=prev
    )
