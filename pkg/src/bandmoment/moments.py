"""Monte Carlo estimation of the second mixed moment of characteristic polynomials.

For an ensemble sample H the quantity of interest is

    F2(l1, l2) = E[ det(l1 - H) det(l2 - H) ],

normalized by the geometric mean D2 = sqrt(F2(l1,l1)) sqrt(F2(l2,l2)) and
compared against the sine-kernel curve in the bulk scaling limit.  Every
estimator here shares one sample set between the numerator and both
denominator factors, accumulates determinants in signed-log form with
max-shifted block sums (block size 4096), and propagates errors by
leave-one-block-out jackknife over 50 fixed blocks.

An exact Isserlis-pairing expansion (dimension <= 3) provides the independent
oracle the Monte Carlo path is validated against.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import charpoly, sampler
from .lattice import CovarianceProfile, Lattice1D, covariance_profile
from .saddle import SpectralParams, sine_kernel

_CHUNK = 4096          # samples per accumulation block (single max-shift each)
_JACKKNIFE_BLOCKS = 50
_SMALL_N_BATCH = 8     # below this the vectorized Householder path is used
_WICK_MAX_N = 3


class EstimatorError(RuntimeError):
    """Raised when a Monte Carlo estimate is unusable (variance, rejection, sign)."""


@dataclass
class MomentEstimate:
    """Monte Carlo estimate of a single moment.

    `value`/`stderr` are plain floats (inf/0.0 when outside double range; see
    `in_log_domain` and the log fields, which are always valid).  Block sums
    are retained so derived quantities can jackknife over the shared samples.
    """

    value: float
    stderr: float
    samples: int
    in_log_domain: bool
    sign: int
    log_abs_value: float
    log_abs_stderr: float
    rejected: int = 0
    shift: float = field(default=0.0, repr=False)
    block_sums: np.ndarray | None = field(default=None, repr=False)
    block_counts: np.ndarray | None = field(default=None, repr=False)


@dataclass
class RatioResult:
    """Sine-kernel comparison of the normalized moment at one xi pair."""

    params: SpectralParams
    ratio: float
    stderr: float
    sine_ref: float
    deviation: float
    samples: int
    rejected: int = 0


# ---------------------------------------------------------------------------
# exact pairing-expansion oracle (N <= 3)
# ---------------------------------------------------------------------------

def _perm_sign(p: tuple[int, ...]) -> int:
    n = len(p)
    seen = [False] * n
    sign = 1
    for i in range(n):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _pairing_sum(factors: list[tuple[int, int]], J: np.ndarray) -> float:
    """Sum over perfect matchings of the entry covariances.

    The only nonzero second moment is E[H_ab H_ba] = J_ab, so a pairing
    contributes only when the paired factors have mirrored indices.
    """
    if len(factors) % 2 == 1:
        return 0.0
    if not factors:
        return 1.0
    a, b = factors[0]
    total = 0.0
    for k in range(1, len(factors)):
        c, d = factors[k]
        if c == b and d == a:
            total += J[a, b] * _pairing_sum(factors[1:k] + factors[k + 1:], J)
    return total


def wick_exact_f2(n: int, lambda1: float, lambda2: float,
                  profile: CovarianceProfile) -> float:
    """Exact E[det(l1 - H) det(l2 - H)] by permutation expansion and pairing.

    Both determinants are expanded over permutations, the (lambda - H_ii)
    factors at fixed points are multiplied out, and every Gaussian moment is
    evaluated by Isserlis pairing with E[H_ab H_cd] = J_ab [c=b, d=a].
    Supported for n <= 3 only (combinatorial guard).
    """
    if not 1 <= n <= _WICK_MAX_N:
        raise ValueError(f"exact expansion supported for n in 1..{_WICK_MAX_N}, got {n}")
    if profile.size != n:
        raise ValueError("profile size does not match n")
    J = profile.J
    perms = list(itertools.permutations(range(n)))
    expansions = []
    for p in perms:
        sgn = _perm_sign(p)
        fixed = [i for i in range(n) if p[i] == i]
        moved = [(i, p[i]) for i in range(n) if p[i] != i]
        expansions.append((sgn, fixed, moved))
    total = 0.0
    for sgn1, fix1, mov1 in expansions:
        for sgn2, fix2, mov2 in expansions:
            base_sign = sgn1 * sgn2 * (-1) ** (len(mov1) + len(mov2))
            for k1 in range(len(fix1) + 1):
                for sub1 in itertools.combinations(fix1, k1):
                    for k2 in range(len(fix2) + 1):
                        for sub2 in itertools.combinations(fix2, k2):
                            factors = (mov1 + [(i, i) for i in sub1]
                                       + mov2 + [(j, j) for j in sub2])
                            ev = _pairing_sum(factors, J)
                            if ev == 0.0:
                                continue
                            coeff = (base_sign * (-1) ** (k1 + k2)
                                     * lambda1 ** (len(fix1) - k1)
                                     * lambda2 ** (len(fix2) - k2))
                            total += coeff * ev
    return total


# ---------------------------------------------------------------------------
# shared-sample determinant evaluation
# ---------------------------------------------------------------------------

@dataclass
class DetLogSamples:
    """Per-sample signed-log determinants at each requested lambda.

    signs/logmags have shape (samples, len(lambdas)); rejected rows (non-finite
    recurrence output) are removed but counted.
    """

    lambdas: np.ndarray
    signs: np.ndarray
    logmags: np.ndarray
    rejected: int


def _eval_chunk(kind: str, n: int, profile, lambdas, seed, start, count,
                signs_out, logs_out):
    """Fill one fixed block of the output arrays; pure function of its arguments."""
    stream = sampler.RngStream(seed, start)
    H = sampler.sample_batch(kind, n, profile, stream, count)
    if n <= _SMALL_N_BATCH:
        d, e = charpoly.tridiagonalize_batch(H)
    else:
        d = np.empty((count, n))
        e = np.empty((count, max(n - 1, 1)))
        for b in range(count):
            t = charpoly.tridiagonalize(H[b])
            d[b] = t.d
            e[b, : n - 1] = t.e
    e2 = e[:, : n - 1] ** 2 if n > 1 else np.zeros((count, 0))
    s, lg = charpoly.char_det_many(d, e2, lambdas)
    signs_out[start:start + count] = s
    logs_out[start:start + count] = lg


def det_log_samples(ensemble: str, n: int, W: float | None, lambdas,
                    samples: int, seed: int, threads: int = 1,
                    progress=None) -> DetLogSamples:
    """Evaluate det(lambda - H) in signed-log form for `samples` fresh samples.

    Each sample is tridiagonalized once and evaluated at every lambda.  Work
    is split into fixed 4096-sample blocks keyed by their start index, so the
    result is bit-identical for any thread count.  `progress(done, total)` is
    invoked after each completed block (reporting only; does not affect
    results).
    """
    if samples < 2:
        raise EstimatorError("need at least 2 samples")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or len(lambdas) == 0:
        raise ValueError("lambdas must be a nonempty 1-d sequence of reals")
    if ensemble == "band":
        if W is None or not W > 0:
            raise ValueError("band ensemble requires a positive bandwidth W")
        profile = covariance_profile(Lattice1D(n), W)
    elif ensemble == "gue":
        profile = None
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")

    signs = np.empty((samples, len(lambdas)))
    logs = np.empty((samples, len(lambdas)))
    starts = list(range(0, samples, _CHUNK))
    jobs = [(start, min(_CHUNK, samples - start)) for start in starts]
    done = 0
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futures = [
                ex.submit(_eval_chunk, ensemble, n, profile, lambdas, seed,
                          start, count, signs, logs)
                for start, count in jobs
            ]
            for f, (_, count) in zip(futures, jobs):
                f.result()
                done += count
                if progress is not None:
                    progress(done, samples)
    else:
        for start, count in jobs:
            _eval_chunk(ensemble, n, profile, lambdas, seed, start, count, signs, logs)
            done += count
            if progress is not None:
                progress(done, samples)

    # a row is usable if every entry is either finite or an exact-zero marker (-inf)
    ok = ~np.any(np.isnan(logs), axis=1) & ~np.any(np.isposinf(logs), axis=1)
    rejected = int(samples - ok.sum())
    if rejected:
        signs = signs[ok]
        logs = logs[ok]
    if signs.shape[0] < 2:
        raise EstimatorError("all samples rejected")
    return DetLogSamples(lambdas, signs, logs, rejected)


def _pair_products(dets: DetLogSamples, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    s = dets.signs[:, a] * dets.signs[:, b]
    with np.errstate(invalid="ignore"):
        logp = dets.logmags[:, a] + dets.logmags[:, b]
    logp = np.where(s == 0, -np.inf, logp)
    return s, logp


def _block_edges(n: int, blocks: int) -> np.ndarray:
    return np.array([(b * n) // blocks for b in range(blocks + 1)], dtype=np.int64)


def _reduce_signed_log(s: np.ndarray, logp: np.ndarray, rejected: int) -> MomentEstimate:
    """Mean and standard error of s*exp(logp) without leaving the log domain.

    Chunked accumulation: one max-shift per 4096-sample block, blocks combined
    by signed-log addition in index order.  Block partial sums at the global
    shift are kept for downstream jackknifing.
    """
    n = len(s)
    # global shift for the variance pass and the retained block sums
    M = float(np.max(logp))
    if M == -math.inf:
        edges = _block_edges(n, _JACKKNIFE_BLOCKS)
        return MomentEstimate(0.0, 0.0, n, True, 0, -math.inf, -math.inf, rejected,
                              0.0, np.zeros(_JACKKNIFE_BLOCKS), edges[1:] - edges[:-1])
    total = charpoly.SignedLog.zero()
    for start in range(0, n, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n))
        mc = float(np.max(logp[sl]))
        if mc == -math.inf:
            continue
        part = float(np.sum(s[sl] * np.exp(logp[sl] - mc)))
        if part != 0.0:
            total = total.add(charpoly.SignedLog(1 if part > 0 else -1,
                                                 mc + math.log(abs(part))))
    mean = charpoly.SignedLog(total.sign, total.log_mag - math.log(n))

    u = s * np.exp(logp - M)
    edges = _block_edges(n, _JACKKNIFE_BLOCKS)
    block_sums = np.add.reduceat(u, edges[:-1])
    block_counts = edges[1:] - edges[:-1]
    u_mean = mean.sign * math.exp(mean.log_mag - M) if mean.sign != 0 else 0.0
    var = float(np.sum((u - u_mean) ** 2)) / (n - 1)
    se_shifted = math.sqrt(var / n)
    log_se = M + math.log(se_shifted) if se_shifted > 0 else -math.inf

    value = mean.value()
    stderr = math.exp(log_se) if log_se < 709.0 else math.inf
    return MomentEstimate(
        value=value,
        stderr=stderr,
        samples=n,
        in_log_domain=True,
        sign=mean.sign,
        log_abs_value=mean.log_mag,
        log_abs_stderr=log_se,
        rejected=rejected,
        shift=M,
        block_sums=block_sums,
        block_counts=block_counts,
    )


def mc_f2(ensemble: str, n: int, W: float | None, lambda_list,
          samples: int, seed: int, threads: int = 1) -> dict[tuple[int, int], MomentEstimate]:
    """Monte Carlo estimates of E[det(l_a - H) det(l_b - H)] for all pairs a <= b.

    Keys are 0-based indices into `lambda_list`.  All pairs share the same
    sample set; each sample is tridiagonalized once and evaluated at every
    lambda.
    """
    dets = det_log_samples(ensemble, n, W, lambda_list, samples, seed, threads)
    out: dict[tuple[int, int], MomentEstimate] = {}
    L = len(dets.lambdas)
    for a in range(L):
        for b in range(a, L):
            s, logp = _pair_products(dets, a, b)
            out[(a, b)] = _reduce_signed_log(s, logp, dets.rejected)
    return out


def d2(est_11: MomentEstimate, est_22: MomentEstimate) -> MomentEstimate:
    """Geometric-mean normalization sqrt(F2(l1,l1)) * sqrt(F2(l2,l2)).

    Error propagated by leave-one-block-out jackknife over the shared sample
    blocks; both inputs must come from the same mc_f2 call.
    """
    for est in (est_11, est_22):
        if est.sign <= 0:
            raise EstimatorError("nonpositive diagonal moment estimate; increase samples")
    if est_11.samples != est_22.samples:
        raise ValueError("diagonal estimates do not share a sample set")
    log_val = 0.5 * (est_11.log_abs_value + est_22.log_abs_value)
    n = est_11.samples
    bs1, bs2 = est_11.block_sums, est_22.block_sums
    counts = est_11.block_counts
    t1, t2 = bs1.sum(), bs2.sum()
    rest = n - counts
    with np.errstate(invalid="ignore"):
        vals = np.sqrt((t1 - bs1) / rest) * np.sqrt((t2 - bs2) / rest)
    if not np.all(np.isfinite(vals)):
        raise EstimatorError("jackknife block became nonpositive; increase samples")
    pref = math.exp(0.5 * (est_11.shift + est_22.shift) - log_val) if log_val > -math.inf else 0.0
    # vals are at shifted scale; normalize to ratio-to-mean then rescale
    B = len(vals)
    theta = vals * pref  # = D2_b / D2
    se_rel = math.sqrt((B - 1) / B * float(np.sum((theta - theta.mean()) ** 2)))
    value = math.exp(log_val) if log_val < 709.0 else math.inf
    return MomentEstimate(
        value=value,
        stderr=value * se_rel if value < math.inf else math.inf,
        samples=n,
        in_log_domain=True,
        sign=1,
        log_abs_value=log_val,
        log_abs_stderr=log_val + math.log(se_rel) if se_rel > 0 else -math.inf,
        rejected=max(est_11.rejected, est_22.rejected),
    )


def _jackknife_ratio(dets: DetLogSamples, a: int, b: int) -> tuple[float, float]:
    """Shared-sample ratio F2(la,lb) / sqrt(F2(la,la) F2(lb,lb)) with jackknife stderr."""
    s_ab, l_ab = _pair_products(dets, a, b)
    _, l_aa = _pair_products(dets, a, a)
    _, l_bb = _pair_products(dets, b, b)
    m_ab, m_aa, m_bb = (float(np.max(x)) for x in (l_ab, l_aa, l_bb))
    if math.isinf(m_aa) or math.isinf(m_bb):
        raise EstimatorError("degenerate diagonal moments (all determinants zero)")
    u_ab = s_ab * np.exp(l_ab - m_ab)
    u_aa = np.exp(l_aa - m_aa)
    u_bb = np.exp(l_bb - m_bb)
    pref = math.exp(m_ab - 0.5 * (m_aa + m_bb))
    ratio = pref * u_ab.mean() / math.sqrt(u_aa.mean() * u_bb.mean())

    n = len(u_ab)
    edges = _block_edges(n, _JACKKNIFE_BLOCKS)
    sums_ab = np.add.reduceat(u_ab, edges[:-1])
    sums_aa = np.add.reduceat(u_aa, edges[:-1])
    sums_bb = np.add.reduceat(u_bb, edges[:-1])
    counts = edges[1:] - edges[:-1]
    rest = n - counts
    t_ab, t_aa, t_bb = u_ab.sum(), u_aa.sum(), u_bb.sum()
    with np.errstate(invalid="ignore"):
        theta = (pref * ((t_ab - sums_ab) / rest)
                 / np.sqrt(((t_aa - sums_aa) / rest) * ((t_bb - sums_bb) / rest)))
    if not np.all(np.isfinite(theta)):
        raise EstimatorError("jackknife block became degenerate; increase samples")
    B = len(theta)
    se = math.sqrt((B - 1) / B * float(np.sum((theta - theta.mean()) ** 2)))
    return float(ratio), se


def ratio_vs_sine(params: SpectralParams, ensemble: str, W: float | None,
                  samples: int, seed: int, threads: int = 1) -> RatioResult:
    """Normalized moment F2/D2 at the bulk-scaled pair, with sine-kernel reference.

    The numerator and both normalization factors are estimated from the same
    sample set, so their correlated fluctuations largely cancel in the ratio.
    """
    dets = det_log_samples(ensemble, params.n_dim, W,
                           [params.lambda1, params.lambda2], samples, seed, threads)
    sine_ref = sine_kernel(params.xi1 - params.xi2)
    if params.lambda1 == params.lambda2:
        # numerator and denominator are the same per-sample values
        ratio, se = 1.0, 0.0
    else:
        ratio, se = _jackknife_ratio(dets, 0, 1)
    return RatioResult(
        params=params,
        ratio=ratio,
        stderr=se,
        sine_ref=sine_ref,
        deviation=ratio - sine_ref,
        samples=dets.signs.shape[0],
        rejected=dets.rejected,
    )


def moment_scan(ensemble: str, n: int, W: float | None, lambda0: float,
                xi_pairs, samples: int, seed: int, threads: int = 1,
                progress=None) -> list[RatioResult]:
    """Ratio-vs-sine results for a grid of xi pairs sharing one sample set.

    The union of scaled lambdas over the grid is evaluated per sample, so the
    dominant tridiagonalization cost is amortized across the whole scan.
    """
    from .saddle import scaled_lambdas

    plist = [scaled_lambdas(lambda0, x1, x2, n) for (x1, x2) in xi_pairs]
    lam_index: dict[float, int] = {}
    for p in plist:
        for lam in (p.lambda1, p.lambda2):
            lam_index.setdefault(lam, len(lam_index))
    lambdas = np.array(sorted(lam_index, key=lam_index.get))
    dets = det_log_samples(ensemble, n, W, lambdas, samples, seed, threads, progress)
    results = []
    for p in plist:
        ia, ib = lam_index[p.lambda1], lam_index[p.lambda2]
        sine_ref = sine_kernel(p.xi1 - p.xi2)
        if ia == ib:
            ratio, se = 1.0, 0.0
        else:
            ratio, se = _jackknife_ratio(dets, ia, ib)
        results.append(RatioResult(p, ratio, se, sine_ref, ratio - sine_ref,
                                   dets.signs.shape[0], dets.rejected))
    return results
