"""Classical reconstruction baselines.

Two solvers over the coded measurements:

* LASSO over a fixed orthonormal 3D-DCT dictionary,
  min_a ||y - Phi D a||^2 + lambda ||a||_1, by FISTA.
* TV-regularized least squares, min_x ||y - Phi x||^2 + lambda TV(x),
  by a monotone two-step iterative shrinkage scheme whose TV proximal
  sub-step is solved with a dual gradient-projection (Chambolle) loop.

The TV norm is the isotropic spatial one: sum over pixels and frames of
sqrt(dx^2 + dy^2) with forward differences and zero boundary differences.
Objectives are written exactly as stated above (squared residual, no 1/2
factor); internal step sizes rescale consistently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct


class NumericError(RuntimeError):
    """Power iteration or an iterative solve failed to behave numerically."""


@dataclass(frozen=True)
class Dictionary:
    """Sparsifying dictionary with unit-L2 columns; atoms is (N_p, N_a)."""

    atoms: np.ndarray
    construction: str = "dct3-orthonormal"

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.005
    max_iters: int = 2000
    rel_tol: float = 1e-10
    # TV-only knobs: Chambolle inner iterations and the small-eigenvalue
    # ratio kappa the two-step parameters alpha/beta derive from.
    tv_inner_iters: int = 20
    kappa: float = 1e-4

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


LASSO_DEFAULTS = SolverConfig(lam=0.005)
TV_DEFAULTS = SolverConfig(lam=0.01, max_iters=400)


def build_dct_dictionary(w_p: int, h_p: int, t: int) -> Dictionary:
    """Separable orthonormal 3D DCT-II basis, vectorized in the block
    ordering (spatial row-major within a time slice, slices in time order).

    Columns are exactly orthonormal; the constant block maps to a single
    nonzero coefficient (the DC atom).
    """
    if w_p < 1 or h_p < 1 or t < 1:
        raise ValueError("dims must be positive")
    # dct(I, axis=0) is the forward DCT-II matrix; its rows are the 1-D
    # cosine atoms, row 0 the constant (DC) one.
    bx = dct(np.eye(w_p), axis=0, norm="ortho")
    by = dct(np.eye(h_p), axis=0, norm="ortho")
    bt = dct(np.eye(t), axis=0, norm="ortho")
    # column (u, v, w) = atom, row (n, r, c) = block position, both C-order
    n_p = t * h_p * w_p
    atoms = np.einsum("un,vr,wc->nrcuvw", bt, by, bx).reshape(n_p, n_p)
    return Dictionary(atoms=np.ascontiguousarray(atoms))


def soft_threshold(v, tau):
    """sign(v) * max(|v| - tau, 0); the proximal operator of tau*||.||_1."""
    if np.isscalar(v):
        return float(np.sign(v) * max(abs(v) - tau, 0.0))
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def largest_sq_singular_value(mat: np.ndarray, min_iters: int = 50,
                              max_iters: int = 5000, tol: float = 1e-12) -> float:
    """Largest squared singular value by power iteration on mat^T mat.

    Runs at least ``min_iters`` iterations and until the Rayleigh quotient
    stabilizes; raises NumericError if it never does.
    """
    gram_side = mat.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(gram_side)
    v /= np.linalg.norm(v)
    prev = 0.0
    for i in range(max_iters):
        w = mat.T @ (mat @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0  # zero operator
        v = w / nw
        est = float(v @ (mat.T @ (mat @ v)))
        if i >= min_iters and abs(est - prev) <= tol * max(est, 1.0):
            return est
        prev = est
    if abs(est - prev) > 1e-6 * max(est, 1.0):
        raise NumericError("power iteration did not converge")
    return est


def lasso_objective(a: np.ndarray, C: np.ndarray, y: np.ndarray, lam: float) -> float:
    r = y - C @ a
    return float(r @ r + lam * np.sum(np.abs(a)))


def solve_lasso(
    y: np.ndarray,
    phi,
    dictionary: Dictionary,
    cfg: SolverConfig = LASSO_DEFAULTS,
) -> tuple[np.ndarray, np.ndarray]:
    """FISTA for min_a ||y - Phi D a||^2 + lambda ||a||_1.

    ``phi`` is a PhiMatrix (or any object with ``to_dense``) or a dense
    array.  Step size is 1/L with L the largest squared singular value of
    C = Phi D (power iteration); iterates stop when the objective's
    relative change falls below cfg.rel_tol or at cfg.max_iters.  Returns
    (coefficients a, block x = D a); the returned iterate is the best seen,
    so its objective never exceeds the a = 0 objective.
    """
    dense_phi = phi.to_dense() if hasattr(phi, "to_dense") else np.asarray(phi, dtype=np.float64)
    C = dense_phi @ dictionary.atoms
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (C.shape[0],):
        raise ValueError(f"measurement length {y.shape} vs operator rows {C.shape[0]}")

    L = largest_sq_singular_value(C)
    if L == 0.0:
        a = np.zeros(C.shape[1])
        return a, dictionary.atoms @ a
    step = 1.0 / L
    thresh = cfg.lam / (2.0 * L)

    a = np.zeros(C.shape[1])
    z = a.copy()
    t_k = 1.0
    best = a.copy()
    best_obj = lasso_objective(a, C, y, cfg.lam)
    prev_obj = best_obj
    for _ in range(cfg.max_iters):
        grad_half = C.T @ (C @ z - y)  # gradient of (1/2)||y - Cz||^2 * 2 scaling
        a_next = soft_threshold(z - step * grad_half, thresh)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
        z = a_next + ((t_k - 1.0) / t_next) * (a_next - a)
        a, t_k = a_next, t_next
        obj = lasso_objective(a, C, y, cfg.lam)
        if obj < best_obj:
            best_obj, best = obj, a.copy()
        if abs(prev_obj - obj) <= cfg.rel_tol * max(abs(prev_obj), 1e-300):
            break
        prev_obj = obj
    return best, dictionary.atoms @ best


def tv_norm(z: np.ndarray) -> float:
    """Isotropic spatial total variation of a (t, H, W) array (a single
    frame is promoted): forward differences, replicate edges."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 2:
        z = z[None]
    dr = np.zeros_like(z)
    dc = np.zeros_like(z)
    dr[:, :-1, :] = z[:, 1:, :] - z[:, :-1, :]
    dc[:, :, :-1] = z[:, :, 1:] - z[:, :, :-1]
    return float(np.sum(np.sqrt(dr * dr + dc * dc)))


def _grad2d(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gr = np.zeros_like(f)
    gc = np.zeros_like(f)
    gr[:-1, :] = f[1:, :] - f[:-1, :]
    gc[:, :-1] = f[:, 1:] - f[:, :-1]
    return gr, gc


def _div2d(pr: np.ndarray, pc: np.ndarray) -> np.ndarray:
    div = np.zeros_like(pr)
    div[0, :] += pr[0, :]
    div[1:-1, :] += pr[1:-1, :] - pr[:-2, :]
    div[-1, :] += -pr[-2, :]
    div[:, 0] += pc[:, 0]
    div[:, 1:-1] += pc[:, 1:-1] - pc[:, :-2]
    div[:, -1] += -pc[:, -2]
    return div


def tv_prox(v: np.ndarray, tau: float, n_iters: int = 20) -> np.ndarray:
    """Approximate prox of tau*TV at v: argmin_z 0.5||z - v||^2 + tau*TV(z),
    per frame, by Chambolle's dual gradient projection (step 1/8)."""
    if tau <= 0.0:
        return v.copy()
    v = np.asarray(v, dtype=np.float64)
    single = v.ndim == 2
    if single:
        v = v[None]
    out = np.empty_like(v)
    for n in range(v.shape[0]):
        f = v[n]
        pr = np.zeros_like(f)
        pc = np.zeros_like(f)
        step = 0.25  # sharp stable step for the 2-D dual iteration
        for _ in range(n_iters):
            gr, gc = _grad2d(_div2d(pr, pc) - f / tau)
            mag = np.sqrt(gr * gr + gc * gc)
            denom = 1.0 + step * mag
            pr = (pr + step * gr) / denom
            pc = (pc + step * gc) / denom
        out[n] = f - tau * _div2d(pr, pc)
    return out[0] if single else out


def tv_objective(x: np.ndarray, mask: np.ndarray, y: np.ndarray, lam: float) -> float:
    r = y - np.einsum("nhw,nhw->hw", mask, x)
    return float(np.sum(r * r)) + lam * tv_norm(x)


def solve_tv(
    y: np.ndarray,
    tiled_mask: np.ndarray,
    cfg: SolverConfig = TV_DEFAULTS,
    return_history: bool = False,
):
    """Reconstruct one group of t frames from a coded frame by TV-regularized
    least squares, min_x ||y - Phi x||^2 + lambda TV(x).

    ``y`` is the (H, W) coded frame and ``tiled_mask`` the (t, H, W) bits
    that produced it.  Two-step iterative shrinkage with a monotone guard:
    whenever the two-step candidate would increase the objective the plain
    IST step is used instead, and if that would too, iteration stops.
    With ``return_history`` the per-iterate objective values come back too.
    """
    mask = np.asarray(tiled_mask, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    t, H, W = mask.shape
    if y.shape != (H, W):
        raise ValueError("coded frame and mask dims differ")

    # Phi^T Phi is block-diagonal per pixel with top eigenvalue = per-pixel
    # open-bit count, so the spectral bound is exact.
    xi1 = float(np.max(mask.sum(axis=0)))
    if xi1 == 0.0:
        x = np.zeros((t, H, W))
        return (x, [tv_objective(x, mask, y, cfg.lam)]) if return_history else x
    tau = cfg.lam / (2.0 * xi1)

    kappa = cfg.kappa
    rho = (1.0 - kappa) / (1.0 + kappa)
    alpha = 2.0 / (1.0 + np.sqrt(1.0 - rho * rho))
    beta = 2.0 * alpha / (1.0 + kappa)

    def ist(x):
        resid = y - np.einsum("nhw,nhw->hw", mask, x)
        u = x + (1.0 / xi1) * mask * resid[None]
        return tv_prox(u, tau, cfg.tv_inner_iters)

    x_prev = np.zeros((t, H, W))
    x = ist(x_prev)
    obj = tv_objective(x, mask, y, cfg.lam)
    if not np.isfinite(obj):
        raise NumericError("TV objective not finite after first step")
    history = [obj]
    for _ in range(cfg.max_iters - 1):
        gamma = ist(x)
        cand = (1.0 - alpha) * x_prev + (alpha - beta) * x + beta * gamma
        cand_obj = tv_objective(cand, mask, y, cfg.lam)
        if np.isnan(cand_obj):
            raise NumericError("TV objective diverged to NaN")
        if cand_obj > obj:
            cand = gamma
            cand_obj = tv_objective(gamma, mask, y, cfg.lam)
            if np.isnan(cand_obj):
                raise NumericError("TV objective diverged to NaN")
            if cand_obj > obj:
                break  # neither step improves: approximate prox exhausted
        x_prev, x = x, cand
        history.append(cand_obj)
        converged = abs(obj - cand_obj) <= cfg.rel_tol * max(abs(obj), 1e-300)
        obj = cand_obj
        if converged:
            break
    return (x, history) if return_history else x
