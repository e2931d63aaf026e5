"""Dual certificates for nuclear-norm completion, and the operator
expansions used to analyze them.

A certificate for a tangent space T and observed set Omega is a matrix Y
supported on Omega with P_T(Y) equal to the sign pattern E and
||P_Tperp(Y)|| < 1; together with injectivity of the sampling operator on
T these conditions force the planted matrix to be the unique minimizer of
the nuclear norm over its observed entries.

The central scalar is the deviation statistic

    a = (1/p) ||P_T P_Omega P_T - p P_T|| = ||P_T Q_Omega P_T||,

which is automatically >= 1 whenever |Omega| < dim T.  When a < 1 the
normal operator is invertible on T and the canonical candidate

    Y = P_Omega P_T (P_T P_Omega P_T)^{-1} E

can be built either through its Neumann series
Y = (1/p) P_Omega( sum_k (-1)^k (P_T Q_Omega P_T)^k E ) or by conjugate
gradients on T.  Among all Omega-supported Z with P_T P_Omega(Z) = E this
Y has the smallest Frobenius norm, and ||Y||_F^2 = r + ||P_Tperp Y||_F^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DivergenceError,
    InjectivityError,
    InvalidParameterError,
    NumericFailureError,
)
from .geometry import TangentSpace, incoherence
from .linalg import Rng, spectral_norm
from .sampling import SampleSet, project_omega, q_omega, sample_bernoulli

# Summability threshold for transferring tangent-chain norm control to
# projection chains: if ||(Q_Om Q_T)^k Q_Om(E)|| <= sigma^((k+1)/2) with
# sigma below this value (and 8nr/m < sigma^(3/2)), then the projection
# chains obey ||(Q_Om P_T)^k Q_Om(E)|| <= (1 + 4^(k+1)) sigma^((k+1)/2).
TANGENT_TRANSFER_SIGMA0 = 1.0 / 576.0

_MAX_CHAIN_LEN = 8


def _check_pair(T: TangentSpace, S: SampleSet):
    if S.n1 != T.n or S.n2 != T.n:
        raise InvalidParameterError(
            "sample grid (%d, %d) does not match tangent space n=%d"
            % (S.n1, S.n2, T.n)
        )
    if S.size == 0:
        raise InvalidParameterError("sample set is empty")


def _sym_op_norm(apply_fn, n: int, rng: Rng, tol: float, max_iter: int,
                 restarts: int = 3) -> float:
    """Operator norm of a symmetric operator on n x n matrices.

    Power iteration; the estimate ||B X_t||_F converges to the top
    magnitude eigenvalue even when +-lambda pairs make the Rayleigh
    quotient oscillate.
    """
    if max_iter < 1:
        raise InvalidParameterError("max_iter must be >= 1")
    best = 0.0
    converged_any = False
    for s in range(restarts):
        gen = rng.substream(0xD0000 + s).gen
        X = gen.standard_normal((n, n))
        X /= np.linalg.norm(X)
        prev = -1.0
        est = 0.0
        converged = False
        for _ in range(max_iter):
            Y = apply_fn(X)
            est = float(np.linalg.norm(Y))
            if est == 0.0:
                converged = True
                break
            X = Y / est
            if prev >= 0.0 and abs(est - prev) <= tol * max(est, 1e-300):
                converged = True
                break
            prev = est
        best = max(best, est)
        converged_any = converged_any or converged
    if not converged_any:
        raise NumericFailureError(
            "operator power iteration did not converge", estimate=best
        )
    return best


def deviation_stat(T: TangentSpace, S: SampleSet, rng: Rng | None = None,
                   tol: float = 1e-6, max_iter: int = 600) -> float:
    """The deviation a = ||P_T Q_Omega P_T||.

    a < 1 certifies that the sampling operator is injective on T with
    spectrum of (1/p) P_T P_Omega P_T inside [1 - a, 1 + a]; a >= 1 is
    guaranteed whenever |Omega| < dim T.
    """
    _check_pair(T, S)
    if rng is None:
        rng = Rng(0)

    def op(X):
        return T.apply_pt(q_omega(T.apply_pt(X), S))

    return _sym_op_norm(op, T.n, rng, tol=tol, max_iter=max_iter)


def _lanczos_smallest(T: TangentSpace, S: SampleSet, rng: Rng,
                      steps: int = 200) -> float:
    """Smallest Ritz value of W -> P_T P_Omega (W) on T.

    Full reorthogonalization; the Krylov space is capped at dim T, at which
    point the estimate is exact up to roundoff.  Ritz values approach the
    true smallest eigenvalue from above.
    """
    n = T.n
    steps = min(steps, T.dim)
    gen = rng.gen
    v = T.apply_pt(gen.standard_normal((n, n)))
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise NumericFailureError("degenerate Lanczos start")
    v /= nv
    basis = [v]
    alphas = []
    betas = []
    for _ in range(steps):
        w = T.apply_pt(project_omega(basis[-1], S))
        alpha = float(np.sum(w * basis[-1]))
        alphas.append(alpha)
        w = w - alpha * basis[-1]
        if len(basis) > 1:
            w = w - betas[-1] * basis[-2]
        # two rounds of reorthogonalization keep the basis clean
        for _ in range(2):
            for b in basis:
                w = w - float(np.sum(w * b)) * b
        # roundoff leaks the iterates into the kernel off T, whose zero
        # eigenvalues would masquerade as the smallest Ritz value
        w = T.apply_pt(w)
        beta = float(np.linalg.norm(w))
        if beta <= 1e-14:
            break
        betas.append(beta)
        basis.append(w / beta)
    if betas:
        tri = np.diag(alphas) + np.diag(betas[: len(alphas) - 1], 1) \
            + np.diag(betas[: len(alphas) - 1], -1)
        ritz = np.linalg.eigvalsh(tri)
        return float(ritz[0])
    return float(alphas[0])


@dataclass
class CertificateReport:
    """Everything verify_certificate needs, plus build diagnostics.

    term_norms holds the Frobenius norms of the Neumann series terms when
    the series builder produced the report; iters counts conjugate-gradient
    steps for the solve builder.  failure is None for a completed build.
    """

    Y: np.ndarray
    resid_t: float
    supp_ok: bool
    ptperp_norm: float
    a_stat: float
    injective: bool
    lam_min: float
    method: str
    term_norms: np.ndarray | None = None
    truncated: bool = False
    iters: int = 0
    failure: str | None = None


def _finish_report(T, S, Y, a, rng, method, term_norms=None, truncated=False,
                   iters=0) -> CertificateReport:
    off = np.max(np.abs(Y - project_omega(Y, S))) if Y.size else 0.0
    resid = float(np.linalg.norm(T.apply_pt(Y) - T.e))
    ptperp = spectral_norm(T.apply_ptperp(Y), rng=rng.substream(0xA0001))
    lam_min = _lanczos_smallest(T, S, rng.substream(0xA0002))
    injective = bool(a < 1.0 and lam_min >= S.p * (1.0 - a) / 2.0)
    return CertificateReport(
        Y=Y, resid_t=resid, supp_ok=bool(off == 0.0), ptperp_norm=float(ptperp),
        a_stat=float(a), injective=injective, lam_min=float(lam_min),
        method=method, term_norms=term_norms, truncated=truncated, iters=iters,
    )


def build_certificate_neumann(T: TangentSpace, S: SampleSet, k_max: int = 100,
                              tol: float = 1e-12, rng: Rng | None = None,
                              a_stat: float | None = None) -> CertificateReport:
    """Certificate via the alternating series in powers of P_T Q_Omega P_T.

    Raises DivergenceError when the measured deviation is >= 1.  If k_max
    terms do not reach the tail tolerance the report is flagged truncated
    (the series still sums; the residual field shows what was achieved).
    """
    _check_pair(T, S)
    if rng is None:
        rng = Rng(0)
    a = deviation_stat(T, S, rng=rng.substream(0xA0000)) if a_stat is None else a_stat
    if a >= 1.0:
        raise DivergenceError(
            "deviation %.4f >= 1: series cannot converge" % a
        )
    term = T.e.copy()
    total = term.copy()
    norms = [float(np.linalg.norm(term))]
    tol_abs = tol * norms[0]
    truncated = True
    for _ in range(k_max):
        term = -T.apply_pt(q_omega(term, S))
        nrm = float(np.linalg.norm(term))
        total += term
        norms.append(nrm)
        if nrm <= tol_abs:
            truncated = False
            break
    Y = project_omega(total, S) / S.p
    return _finish_report(
        T, S, Y, a, rng, method="neumann(k_max=%d)" % k_max,
        term_norms=np.array(norms), truncated=truncated,
        iters=len(norms) - 1,
    )


def build_certificate_cg(T: TangentSpace, S: SampleSet, tol: float = 1e-10,
                         max_iter: int = 1000, rng: Rng | None = None,
                         a_stat: float | None = None) -> CertificateReport:
    """Certificate via conjugate gradients on the normal equations in T.

    Solves P_T P_Omega (W) = E over W in T and returns Y = P_Omega(W).
    Raises InjectivityError when the operator is not positive definite and
    ConvergenceError (with the residual) when max_iter is exhausted.
    """
    _check_pair(T, S)
    if max_iter < 1:
        raise InvalidParameterError("max_iter must be >= 1")
    if rng is None:
        rng = Rng(0)
    a = deviation_stat(T, S, rng=rng.substream(0xA0000)) if a_stat is None else a_stat
    if a >= 1.0:
        raise InjectivityError(
            "deviation %.4f >= 1: normal operator is singular on T" % a
        )
    b = T.e
    W = np.zeros_like(b)
    R = b.copy()
    D = R.copy()
    rs = float(np.sum(R * R))
    converged = False
    iters = 0
    for iters in range(1, max_iter + 1):
        AD = T.apply_pt(project_omega(D, S))
        dad = float(np.sum(D * AD))
        if dad <= 0.0:
            raise InjectivityError(
                "normal operator not positive definite (d^T A d = %.3e)" % dad
            )
        step = rs / dad
        W += step * D
        R -= step * AD
        rs_new = float(np.sum(R * R))
        if np.sqrt(rs_new) <= tol:
            converged = True
            break
        D = R + (rs_new / rs) * D
        rs = rs_new
    if not converged:
        raise ConvergenceError(
            "conjugate gradients stalled at residual %.3e" % np.sqrt(rs_new),
            residual=float(np.sqrt(rs_new)), estimate=W,
        )
    Y = project_omega(W, S)
    return _finish_report(
        T, S, Y, a, rng, method="cg(tol=%g)" % tol, iters=iters,
    )


def try_build_certificate(T: TangentSpace, S: SampleSet, method: str = "neumann",
                          rng: Rng | None = None, **kw) -> CertificateReport:
    """Build a certificate, degrading gracefully on divergence.

    When the strict builders refuse (deviation >= 1, singular operator, or
    stalled solve) this returns an uncertifiable report around the zero
    matrix instead of raising, which is what the experiment drivers want.
    """
    if rng is None:
        rng = Rng(0)
    _check_pair(T, S)
    a = kw.pop("a_stat", None)
    if a is None:
        a = deviation_stat(T, S, rng=rng.substream(0xA0000))
    builder = {"neumann": build_certificate_neumann, "cg": build_certificate_cg}
    if method not in builder:
        raise InvalidParameterError("unknown certificate method %r" % method)
    try:
        return builder[method](T, S, rng=rng, a_stat=a, **kw)
    except (DivergenceError, InjectivityError, ConvergenceError) as exc:
        return CertificateReport(
            Y=np.zeros((T.n, T.n)), resid_t=float(np.linalg.norm(T.e)),
            supp_ok=True, ptperp_norm=0.0, a_stat=float(a), injective=False,
            lam_min=0.0, method=method, failure=str(exc),
        )


def verify_certificate(T: TangentSpace, S: SampleSet,
                       rep: CertificateReport | None,
                       tol: float = 1e-6) -> bool:
    """All four certificate conditions at once.

    Support on Omega, tangent residual within tol, strict spectral-norm
    contraction off T, and injectivity on T.  A report from a failed build
    (or None) verifies false, as does any sample set too small to span T.
    """
    if rep is None or rep.failure is not None:
        return False
    if S.size < T.dim:
        return False
    return bool(
        rep.supp_ok
        and rep.resid_t <= tol
        and rep.ptperp_norm < 1.0
        and rep.a_stat < 1.0
        and rep.injective
    )


@dataclass
class ChainNorms:
    """Spectral norms of the two alternating operator chains applied to E:

    pt[k] = ||(Q_Om P_T)^k Q_Om(E)||,  qt[k] = ||(Q_Om Q_T)^k Q_Om(E)||.
    """

    pt: np.ndarray
    qt: np.ndarray


def neumann_term_norms(T: TangentSpace, S: SampleSet, k_max: int,
                       rng: Rng | None = None) -> ChainNorms:
    """Spectral norms of the projection and tangent chains up to k_max <= 8."""
    _check_pair(T, S)
    if not (0 <= k_max <= _MAX_CHAIN_LEN):
        raise InvalidParameterError("k_max must lie in [0, %d]" % _MAX_CHAIN_LEN)
    if rng is None:
        rng = Rng(0)
    Xp = q_omega(T.e, S)
    Xq = Xp.copy()
    pt = [spectral_norm(Xp, rng=rng.substream(1))]
    qt = [pt[0]]
    for k in range(1, k_max + 1):
        Xp = q_omega(T.apply_pt(Xp), S)
        Xq = q_omega(T.apply_qt(Xq), S)
        pt.append(spectral_norm(Xp, rng=rng.substream(2 * k)))
        qt.append(spectral_norm(Xq, rng=rng.substream(2 * k + 1)))
    return ChainNorms(pt=np.array(pt), qt=np.array(qt))


@dataclass
class NeumannCoeffs:
    """Coefficients expressing (Q_Om P_T)^k Q_Om over the four word families

        A_j = (Q_Om Q_T)^j Q_Om      (coefficients alpha, j = 0..k)
        B_j = (Q_Om Q_T)^j           (coefficients beta,  j = 0..k-1)
        C_j = Q_T (Q_Om Q_T)^j Q_Om  (coefficients gamma, j = 0..k-2)
        D_j = Q_T (Q_Om Q_T)^j       (coefficients delta, j = 0..k-3)

    as exact polynomials in rho' and 1/p.
    """

    k: int
    rho_prime: float
    p: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray


def neumann_coeffs(k: int, rho_prime: float, p: float) -> NeumannCoeffs:
    """Coefficient arrays by the exact level-(k) recurrence.

    The recurrence drops out of two substitution rules:
    Q_Om^2 = (1/p)((1-2p) Q_Om + (1-p) I) and
    Q_T^2 = (1-2 rho') Q_T + rho'(1-rho') I.
    """
    if k < 0:
        raise InvalidParameterError("k must be >= 0")
    if not (0.0 < p <= 1.0):
        raise InvalidParameterError("p must lie in (0, 1]")
    if not (0.0 <= rho_prime <= 1.0):
        raise InvalidParameterError("rho_prime must lie in [0, 1]")
    c1 = rho_prime * (1.0 - 2.0 * p) / p
    c2 = rho_prime * (1.0 - p) / p

    alpha = np.array([1.0])
    beta = np.zeros(0)
    gamma = np.zeros(0)
    delta = np.zeros(0)

    def at(arr, j):
        return arr[j] if 0 <= j < arr.shape[0] else 0.0

    for level in range(k):
        # helper combinations appearing in every rule
        g = lambda j: at(alpha, j) + (1.0 - rho_prime) * at(gamma, j)
        h = lambda j: at(beta, j) + (1.0 - rho_prime) * at(delta, j)
        na = np.zeros(level + 2)
        nb = np.zeros(level + 1)
        ng = np.zeros(max(level, 0))
        nd = np.zeros(max(level - 1, 0))
        for j in range(level + 2):
            na[j] = g(j - 1) + c1 * g(j)
            if j == 0:
                na[j] += rho_prime * h(0)
        for j in range(level + 1):
            nb[j] = h(j - 1)
            if j > 0:
                nb[j] += c1 * h(j)
            else:
                nb[j] += c2 * g(0)
        for j in range(ng.shape[0]):
            ng[j] = c2 * g(j + 1)
        for j in range(nd.shape[0]):
            nd[j] = c2 * h(j + 1)
        alpha, beta, gamma, delta = na, nb, ng, nd

    return NeumannCoeffs(k=k, rho_prime=rho_prime, p=p,
                         alpha=alpha, beta=beta, gamma=gamma, delta=delta)


def check_pt_expansion(T: TangentSpace, S: SampleSet, k: int, trials: int = 3,
                       rng: Rng | None = None) -> float:
    """Numerically confirm the word expansion of (Q_Om P_T)^k Q_Om.

    Applies both sides to random matrices and returns the largest relative
    Frobenius discrepancy.  Exact algebra: anything much above roundoff
    indicates a wrong coefficient.
    """
    _check_pair(T, S)
    if not (0 <= k <= _MAX_CHAIN_LEN):
        raise InvalidParameterError("k must lie in [0, %d]" % _MAX_CHAIN_LEN)
    if rng is None:
        rng = Rng(0)
    co = neumann_coeffs(k, T.rho_prime, S.p)
    worst = 0.0
    for t in range(trials):
        X = rng.substream(t).gen.standard_normal((T.n, T.n))
        lhs = q_omega(X, S)
        for _ in range(k):
            lhs = q_omega(T.apply_pt(lhs), S)
        a_chain = [q_omega(X, S)]
        b_chain = [X]
        for _ in range(k):
            a_chain.append(q_omega(T.apply_qt(a_chain[-1]), S))
            b_chain.append(q_omega(T.apply_qt(b_chain[-1]), S))
        rhs = np.zeros_like(X)
        for j, c in enumerate(co.alpha):
            rhs += c * a_chain[j]
        for j, c in enumerate(co.beta):
            rhs += c * b_chain[j]
        for j, c in enumerate(co.gamma):
            rhs += c * T.apply_qt(a_chain[j])
        for j, c in enumerate(co.delta):
            rhs += c * T.apply_qt(b_chain[j])
        disc = np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(lhs))
        worst = max(worst, float(disc))
    return worst


@dataclass
class MomentEstimate:
    """Monte-Carlo estimate of E tr((A^T A)^j) for the tangent chain
    A = (Q_Om Q_T)^k Q_Om (E), with the closed-form first moment when one
    exists and the two a-priori bound expressions evaluated at measured
    incoherence."""

    j: int
    k: int
    n: int
    r: int
    p: float
    trials: int
    mean: float
    stderr: float
    mu: float
    r_mu: float
    bound_power: float
    bound_poly: float
    closed_form: float | None


def estimate_trace_moment(gen_model, n: int, r: int, p: float, j: int, k: int,
                          trials: int, rng: Rng | None = None) -> MomentEstimate:
    """Sample tr((A^T A)^j) over fresh Bernoulli(p) observation draws.

    gen_model(n, r, rng) must return a GroundTruth; the instance is drawn
    once and the tangent space held fixed while Omega varies.  For j=1, k=0
    the exact mean is (1-p) r / p, which the tests pin down.
    """
    if j < 1 or k < 0:
        raise InvalidParameterError("need j >= 1 and k >= 0")
    if trials < 2:
        raise InvalidParameterError("need at least 2 trials for a stderr")
    if not (0.0 < p <= 1.0):
        raise InvalidParameterError("p must lie in (0, 1]")
    if rng is None:
        rng = Rng(0)
    gt = gen_model(n, r, rng.substream(0))
    T = gt.tangent_space()
    inc = incoherence(T)
    mu = max(inc.mu1, inc.mu2)
    r_mu = mu * mu * r
    m = p * n * n

    vals = np.empty(trials)
    for t in range(trials):
        S = sample_bernoulli(n, p, rng.substream(t + 1))
        A = q_omega(T.e, S)
        for _ in range(k):
            A = q_omega(T.apply_qt(A), S)
        s = np.linalg.svd(A, compute_uv=False)
        vals[t] = float(np.sum(s ** (2 * j)))

    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(trials))
    jk = j * (k + 1)
    bound_power = (jk ** (2 * jk)) * n * (n * r_mu ** 2 / m) ** jk
    bound_poly = ((jk ** 6) * n * r_mu / m) ** jk
    closed = (1.0 - p) * r / p if (j == 1 and k == 0) else None
    return MomentEstimate(
        j=j, k=k, n=n, r=r, p=p, trials=trials, mean=mean, stderr=stderr,
        mu=float(mu), r_mu=float(r_mu), bound_power=float(bound_power),
        bound_poly=float(bound_poly), closed_form=closed,
    )
