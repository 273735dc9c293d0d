"""Shared test oracles, independent of the library's solver path."""

import numpy as np


def random_spd(rng, dim, scale=1.0):
    """Random symmetric positive definite matrix with bounded condition."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = rng.uniform(0.3, 3.0, dim) * scale
    return (q * eigs) @ q.T


def random_cov_blocks(rng, p, q, strength=0.8):
    """Random covariance blocks with a guaranteed-valid cross block.

    Builds the joint covariance from whitened-space singular values in
    [0, strength], so it is positive definite by construction.
    """
    sxx = random_spd(rng, p)
    syy = random_spd(rng, q)
    lx = np.linalg.cholesky(sxx)
    ly = np.linalg.cholesky(syy)
    u, _ = np.linalg.qr(rng.standard_normal((p, p)))
    v, _ = np.linalg.qr(rng.standard_normal((q, q)))
    svals = np.zeros((p, q))
    m = min(p, q)
    svals[:m, :m] = np.diag(np.sort(rng.uniform(0, strength, m))[::-1])
    sxy = lx @ u @ svals @ v.T @ ly.T
    return sxx, syy, sxy


def brute_force_rho1(sxx, syy, sxy, coarse=721, refine_rounds=3):
    """Directly maximize |a' Sxy b| / sqrt(a' Sxx a * b' Syy b) for
    p = q = 2 over direction angles, by dense grid search plus local
    grid refinement. Independent of any eigen/SVD machinery."""

    def corr(theta, phi):
        a = np.array([np.cos(theta), np.sin(theta)])
        b = np.array([np.cos(phi), np.sin(phi)])
        num = np.abs(a @ sxy @ b)
        den = np.sqrt((a @ sxx @ a) * (b @ syy @ b))
        return num / den

    thetas = np.linspace(0.0, np.pi, coarse)
    phis = np.linspace(0.0, np.pi, coarse)
    ct = np.cos(thetas)[:, None]
    st = np.sin(thetas)[:, None]
    best = -1.0
    best_t = best_p = 0.0
    a_sxx_a = (
        ct * ct * sxx[0, 0] + 2 * ct * st * sxx[0, 1] + st * st * sxx[1, 1]
    ).ravel()
    for j, phi in enumerate(phis):
        b = np.array([np.cos(phi), np.sin(phi)])
        sb = sxy @ b
        num = np.abs(ct.ravel() * sb[0] + st.ravel() * sb[1])
        den = np.sqrt(a_sxx_a * (b @ syy @ b))
        vals = num / den
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_t, best_p = float(vals[i]), thetas[i], phi
    width = np.pi / (coarse - 1)
    for _ in range(refine_rounds):
        t_grid = np.linspace(best_t - width, best_t + width, 41)
        p_grid = np.linspace(best_p - width, best_p + width, 41)
        for t in t_grid:
            for ph in p_grid:
                value = corr(t, ph)
                if value > best:
                    best, best_t, best_p = float(value), t, ph
        width /= 15.0
    return best


def random_invertible(rng, dim, cond_lo=0.5, cond_hi=2.0):
    """Well-conditioned random invertible matrix."""
    u, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    v, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    s = rng.uniform(cond_lo, cond_hi, dim)
    return (u * s) @ v.T
