"""The measurement property testers and the distance estimator.

Each tester consumes a black box through entangled queries only, uses the
published sample-size constants, and returns a Verdict carrying the full
stage bookkeeping.  Physical randomness (query outcomes, measurements on
post-states) is drawn from the box's stream; tester-apparatus randomness
(swap tests, the final projective check of the finite-set test) is drawn
from streams derived from the config seed, so verdicts are reproducible
given (seed, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import metric, pauli, schur
from .blackbox import BlackBox, paired_swap_zeros
from .core import DimensionMismatch, Measurement, QmtestError, choi_prob, hs_inner

SAMPLING_MODES = ("aggregate", "per_trial")


class DimensionNotPowerOfTwo(DimensionMismatch):
    """The stabilizer tester needs an n-qubit black box."""


class GramIllConditioned(QmtestError):
    """Reference states are nearly dependent; contradicts the separation gamma."""


@dataclass(frozen=True)
class TesterConfig:
    epsilon: float
    seed: int = 0
    sampling: str = "aggregate"
    constant_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.sampling not in SAMPLING_MODES:
            raise ValueError(f"sampling must be one of {SAMPLING_MODES}")
        if self.constant_scale <= 0:
            raise ValueError("constant_scale must be positive")


@dataclass
class Verdict:
    decision: str
    reject_stage: str | None
    query_count: int
    stage_stats: dict
    params: dict

    def __post_init__(self):
        if (self.decision == "reject") != (self.reject_stage is not None):
            raise ValueError("reject_stage must be present exactly when rejecting")

    @property
    def accepted(self) -> bool:
        return self.decision == "accept"


@dataclass(frozen=True)
class FiniteSetSpec:
    """Finite family of candidate measurements with their separation.

    ``gamma`` is the minimum pairwise distance; it is recomputed on
    construction and must match to 1e-10.
    """

    members: tuple[Measurement, ...]
    gamma: float
    k: int

    def __post_init__(self):
        recomputed = _min_pairwise_delta(self.members)
        if abs(recomputed - self.gamma) > 1e-10:
            raise ValueError(
                f"stated gamma {self.gamma} != recomputed min distance {recomputed}"
            )
        if self.k != max(len(m) for m in self.members):
            raise ValueError("k must be the maximum outcome count of the members")

    @classmethod
    def from_members(cls, members) -> "FiniteSetSpec":
        members = tuple(members)
        return cls(
            members=members,
            gamma=_min_pairwise_delta(members),
            k=max(len(m) for m in members),
        )


def _min_pairwise_delta(members) -> float:
    best = math.inf
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            best = min(best, metric.delta_measurement(members[i], members[j]).delta)
    return best


def _tester_rng(cfg: TesterConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(cfg.seed, stream)))


def _scaled_count(value: float, scale: float) -> int:
    return math.ceil(scale * value)


# ---------------------------------------------------------------------------
# stabilizer test


def stabilizer_constants(epsilon: float, scale: float = 1.0) -> dict:
    L = _scaled_count(20000 / epsilon**4, scale)
    N = math.floor((0.5 - epsilon**2 / 64) * L)
    T = math.ceil(0.99 * N)
    W = _scaled_count(12 / epsilon**2, scale)
    return {"L": L, "N": N, "T": T, "W": W, "half_window": epsilon**2 / 64}


def test_stabilizer(box: BlackBox, cfg: TesterConfig) -> Verdict:
    """Accepts measurements close to a two-outcome Pauli-projector pair.

    Stage 1 checks the outcome law is two-valued and balanced; stage 2 checks
    the post-states put half their label weight on the identity and half on a
    single common label; stage 3 checks the signed eigenspace assignment.
    """
    if box.d != 2 or box.n is None:
        raise DimensionNotPowerOfTwo("construct the black box with d=2")
    n = box.n
    consts = stabilizer_constants(cfg.epsilon, cfg.constant_scale)
    L, T, W = consts["L"], consts["T"], consts["W"]
    lo, hi = 0.5 - consts["half_window"], 0.5 + consts["half_window"]
    params = {"epsilon": cfg.epsilon, "seed": cfg.seed, "sampling": cfg.sampling,
              "constant_scale": cfg.constant_scale, **consts}
    stats: dict = {}

    if cfg.sampling == "aggregate":
        counts = box.sample_outcome_counts(L)
    else:
        counts = np.bincount(box.query_batch(L), minlength=box.num_outcomes)
    stats["outcome_counts"] = counts.tolist()
    if counts[2:].sum() > 0:
        return Verdict("reject", "outcome_support", box.query_count, stats, params)
    frac1 = counts[0] / L
    stats["outcome1_fraction"] = frac1
    if not lo <= frac1 <= hi:
        return Verdict("reject", "outcome_fraction", box.query_count, stats, params)

    label_counts = []
    for branch in (0, 1):
        if cfg.sampling == "aggregate":
            label_counts.append(box.sample_label_counts(branch, T))
        else:
            drawn = box.label_batch(branch, T)
            label_counts.append(np.bincount(drawn, minlength=4**n))
    observed = set(np.nonzero(label_counts[0])[0]) | set(np.nonzero(label_counts[1])[0])
    extra = sorted(observed - {0})
    stats["labels_observed"] = len(observed)
    if len(extra) != 1:
        stats["label_ambiguity"] = len(extra) == 0
        return Verdict("reject", "pauli_labels", box.query_count, stats, params)
    ab = pauli.label_from_index(extra[0], 2, n)
    stats["ab_label"] = [list(ab.x), list(ab.z)]
    fracs = [label_counts[b][0] / T for b in (0, 1)]
    stats["identity_label_fractions"] = fracs
    if not all(lo <= f <= hi for f in fracs):
        return Verdict("reject", "pauli_fraction", box.query_count, stats, params)

    fail_probs = (1.0 - box.sign_plus_prob(0, ab), box.sign_plus_prob(1, ab))
    failures = []
    for p_fail in fail_probs:
        if cfg.sampling == "aggregate":
            failures.append(int(box.rng.binomial(W, p_fail)))
        else:
            failures.append(int((box.rng.random(W) < p_fail).sum()))
    stats["sign_failures"] = failures
    if failures[0] > 0 or failures[1] > 0:
        return Verdict("reject", "sign_check", box.query_count, stats, params)
    return Verdict("accept", None, box.query_count, stats, params)


# ---------------------------------------------------------------------------
# k-local test


def klocal_constants(epsilon: float, k: int, scale: float = 1.0) -> dict:
    L = _scaled_count(1200 * k / epsilon**2 * (math.log(k / epsilon) + 1), scale)
    return {"L": L}


def test_klocal(box: BlackBox, k: int, cfg: TesterConfig) -> Verdict:
    """Accepts iff all sampled labels fit inside a k-site window."""
    if box.d is None:
        raise ValueError("construct the black box with its qudit dimension d")
    d, n = box.d, box.n
    consts = klocal_constants(cfg.epsilon, k, cfg.constant_scale)
    L = consts["L"]
    params = {"epsilon": cfg.epsilon, "k": k, "seed": cfg.seed,
              "sampling": cfg.sampling, "constant_scale": cfg.constant_scale, **consts}

    if cfg.sampling == "aggregate":
        label_counts = box.sample_joint_label_counts(L)
    else:
        outcomes = box.query_batch(L)
        label_counts = np.zeros(d ** (2 * n), dtype=np.int64)
        for i in np.unique(outcomes):
            drawn = box.label_batch(int(i), int((outcomes == i).sum()))
            label_counts += np.bincount(drawn, minlength=label_counts.size)
    masks = pauli._support_masks(d, n)
    union_mask = 0
    for idx in np.nonzero(label_counts)[0]:
        union_mask |= int(masks[idx])
    union = {s + 1 for s in range(n) if union_mask >> s & 1}
    stats = {"support_union": sorted(union), "distinct_labels": int((label_counts > 0).sum())}
    if len(union) <= k:
        return Verdict("accept", None, box.query_count, stats, params)
    return Verdict("reject", "support_size", box.query_count, stats, params)


# ---------------------------------------------------------------------------
# permutation-invariance test


def perminv_constants(epsilon: float, scale: float = 1.0) -> dict:
    return {"L": _scaled_count(5 / epsilon**2, scale)}


def test_perminv(box: BlackBox, basis: schur.SchurBasis, cfg: TesterConfig) -> Verdict:
    """Accepts iff L symmetry-check iterations all pass.

    Each iteration passes with probability (1/D) sum_i |hat(M_i)|^2, so the
    acceptance probability is that value to the L-th power.
    """
    if box.dim != basis.D:
        raise DimensionMismatch("box and basis dimensions differ")
    L = perminv_constants(cfg.epsilon, cfg.constant_scale)["L"]
    p = box.schur_pass_prob(basis)
    params = {"epsilon": cfg.epsilon, "seed": cfg.seed, "sampling": cfg.sampling,
              "constant_scale": cfg.constant_scale, "L": L}
    stats = {"pass_prob": p}
    if cfg.sampling == "per_trial":
        for j in range(1, L + 1):
            if not box.schur_iteration(basis):
                stats["iterations"] = j
                return Verdict("reject", "schur_iteration", box.query_count, stats, params)
        stats["iterations"] = L
        return Verdict("accept", None, box.query_count, stats, params)
    # aggregate: draw the first failing iteration by inverse transform
    u = box.rng.random()
    if p <= 0.0:
        first_failure = 1
    elif p >= 1.0 or u <= 0.0:
        first_failure = L + 1
    else:
        first_failure = 1 + math.floor(math.log(u) / math.log(p))
    queries = min(first_failure, L)
    box.query_count += queries
    stats["iterations"] = queries
    if first_failure > L:
        return Verdict("accept", None, box.query_count, stats, params)
    return Verdict("reject", "schur_iteration", box.query_count, stats, params)


# ---------------------------------------------------------------------------
# finite-set test


def finite_set_constants(epsilon: float, gamma: float, k: int, m: int,
                         scale: float = 1.0) -> dict:
    a = min(epsilon, gamma)
    L = max(
        _scaled_count(5000 * k**2 * math.log(20 * k) / a**8, scale),
        _scaled_count(2 * math.log(5 * m) / a**2, scale),
    )
    return {"a": a, "L": L, "count_threshold": 0.1 * a**2 * L / k}


def _log_overlap_product(pairs, counts) -> complex:
    """prod_j overlap_j^{counts_j} accumulated as log-magnitude plus phase.

    Unit overlaps keep the log-magnitude non-positive, so the only rounding
    hazard is graceful underflow of the final exponential.
    """
    log_mag = 0.0
    phase = 0.0
    for ov, c in zip(pairs, counts):
        if c == 0:
            continue
        mag = abs(ov)
        if mag == 0.0:
            return 0.0
        log_mag += c * math.log(mag)
        phase += c * math.atan2(ov.imag, ov.real)
    if log_mag < -745.0:
        return 0.0
    return math.exp(log_mag) * complex(math.cos(phase), math.sin(phase))


def _unit_choi_overlap(A, B) -> complex:
    na = float(np.linalg.norm(A))
    nb = float(np.linalg.norm(B))
    if na < 1e-14 or nb < 1e-14:
        return 0.0
    return hs_inner(A, B) / (na * nb)


def test_finite_set(box: BlackBox, members: FiniteSetSpec, cfg: TesterConfig) -> Verdict:
    """Accepts measurements that match some member of the finite family.

    Filters members by outcome statistics, then simulates the projective check
    onto the span of the surviving members' tensor-power reference states:
    the acceptance probability is the exact squared projection computed from
    the Gram matrix, with every tensor-power overlap held in log form.
    """
    for member in members.members:
        if member.dim != box.dim:
            raise DimensionMismatch("member and box dimensions differ")
    k, m = members.k, len(members.members)
    consts = finite_set_constants(cfg.epsilon, members.gamma, k, m, cfg.constant_scale)
    L, a = consts["L"], consts["a"]
    params = {"epsilon": cfg.epsilon, "gamma": members.gamma, "k": k, "m": m,
              "seed": cfg.seed, "sampling": cfg.sampling,
              "constant_scale": cfg.constant_scale, "L": L, "a": a}
    stats: dict = {}

    if cfg.sampling == "aggregate":
        counts = box.sample_outcome_counts(L)
    else:
        counts = np.bincount(box.query_batch(L), minlength=box.num_outcomes)
    stats["outcome_counts"] = counts.tolist()
    if counts[k:].sum() > 0:
        return Verdict("reject", "outcome_support", box.query_count, stats, params)
    counts = np.pad(counts, (0, max(0, k - counts.size)))[:k]

    surviving = []
    for idx, member in enumerate(members.members):
        ok = True
        for j in range(k):
            if counts[j] >= consts["count_threshold"]:
                if choi_prob(member.operator(j)) < (1 - 0.1 * a**2) * counts[j] / L:
                    ok = False
                    break
        if ok:
            surviving.append(idx)
    stats["surviving_members"] = surviving
    if not surviving:
        return Verdict("reject", "member_filter", box.query_count, stats, params)

    t = len(surviving)
    gram = np.eye(t, dtype=np.complex128)
    for r in range(t):
        for s in range(r + 1, t):
            X = members.members[surviving[r]]
            Y = members.members[surviving[s]]
            pairs = [_unit_choi_overlap(X.operator(j), Y.operator(j)) for j in range(k)]
            val = _log_overlap_product(pairs, counts)
            gram[r, s] = val
            gram[s, r] = np.conj(val)
    overlap_vec = np.empty(t, dtype=np.complex128)
    for r in range(t):
        X = members.members[surviving[r]]
        pairs = [
            _unit_choi_overlap(X.operator(j), box._hidden.operator(j)) for j in range(k)
        ]
        overlap_vec[r] = _log_overlap_product(pairs, counts)

    vals, vecs = np.linalg.eigh(gram)
    if vals.min() < 1e-12:
        raise GramIllConditioned(
            f"reference Gram matrix eigenvalue {vals.min():.3e} below 1e-12"
        )
    comps = vecs.conj().T @ overlap_vec
    projection = float(np.sum(np.abs(comps) ** 2 / vals).real)
    projection = min(max(projection, 0.0), 1.0)
    stats["projection_prob"] = projection
    accept = _tester_rng(cfg, stream=2).random() < projection
    if accept:
        return Verdict("accept", None, box.query_count, stats, params)
    return Verdict("reject", "projection", box.query_count, stats, params)


# ---------------------------------------------------------------------------
# overlap and distance estimation


def overlap_copies(epsilon: float, delta: float) -> int:
    """Swap-test repetitions for precision epsilon and confidence 1 - delta."""
    return math.ceil(2 * math.log(2 / delta) / epsilon**4)


def overlap_estimate_from_counts(zeros: int, copies: int) -> float:
    """sqrt(max(2 p0_hat - 1, 0)) with p0_hat the zero-outcome fraction."""
    return math.sqrt(max(2.0 * zeros / copies - 1.0, 0.0))


def estimate_overlap(copies: int, overlap_true: float, rng: np.random.Generator,
                     sampling: str = "aggregate") -> float:
    """Swap-test overlap estimate for two states with the given true overlap."""
    if copies < 1:
        raise ValueError("need at least one copy")
    p0 = (1.0 + min(max(overlap_true, 0.0), 1.0) ** 2) / 2.0
    if sampling == "aggregate":
        zeros = int(rng.binomial(copies, p0))
    else:
        zeros = int((rng.random(copies) < p0).sum())
    return overlap_estimate_from_counts(zeros, copies)


def distance_constants(epsilon: float, k: int, scale: float = 1.0) -> dict:
    L = _scaled_count(50000 * k**5 * math.log(40 * k) / epsilon**12, scale)
    threshold = epsilon**4 / (16 * k) - epsilon**4 / (36 * k**2)
    return {"L": L, "threshold": threshold, "T": math.floor(threshold * L)}


@dataclass
class EstimateReport:
    delta_hat: float
    query_count: int
    stage_stats: dict
    params: dict


def estimate_distance(box_m: BlackBox, box_n: BlackBox, k: int,
                      cfg: TesterConfig) -> EstimateReport:
    """Estimate the distance between two hidden measurements with <= k outcomes.

    Collects outcome fractions from L entangled queries per box, keeps the
    outcomes frequent on both sides, swap-tests each retained pair of
    post-states, and reports sqrt(1 - sum_i sqrt(a_i b_i) lambda_i) clamped
    at zero.
    """
    if box_m.dim != box_n.dim:
        raise DimensionMismatch("boxes live on different dimensions")
    consts = distance_constants(cfg.epsilon, k, cfg.constant_scale)
    L, T, threshold = consts["L"], consts["T"], consts["threshold"]
    params = {"epsilon": cfg.epsilon, "k": k, "seed": cfg.seed,
              "sampling": cfg.sampling, "constant_scale": cfg.constant_scale, **consts}

    def fractions(box: BlackBox) -> np.ndarray:
        if cfg.sampling == "aggregate":
            counts = box.sample_outcome_counts(L)
        else:
            counts = np.bincount(box.query_batch(L), minlength=box.num_outcomes)
        return np.pad(counts, (0, max(0, k - counts.size))) / L

    a = fractions(box_m)
    b = fractions(box_n)
    keep_a = {i for i in range(k) if a[i] >= threshold}
    keep_b = {i for i in range(k) if b[i] >= threshold}
    shared = sorted(keep_a & keep_b)
    rng = _tester_rng(cfg, stream=1)
    lambdas = {}
    total = 0.0
    for i in shared:
        zeros = paired_swap_zeros(
            box_m, box_n, i, T, rng, per_trial=cfg.sampling == "per_trial"
        )
        lam = overlap_estimate_from_counts(zeros, T)
        lambdas[i] = lam
        total += math.sqrt(a[i] * b[i]) * lam
    delta_hat = math.sqrt(max(1.0 - total, 0.0))
    stats = {"fractions_m": a.tolist(), "fractions_n": b.tolist(),
             "kept_m": sorted(keep_a), "kept_n": sorted(keep_b),
             "overlap_estimates": lambdas}
    return EstimateReport(delta_hat=delta_hat,
                          query_count=box_m.query_count + box_n.query_count,
                          stage_stats=stats, params=params)


def test_identity(box_m: BlackBox, box_n: BlackBox, k: int,
                  cfg: TesterConfig) -> Verdict:
    """Same-or-far decision under the promise that the distance is 0 or >= eps.

    Runs the distance estimator at precision eps/2 and declares "same"
    (accept) when the estimate lands below eps/2.  The promise itself is not
    checkable from queries, which the verdict records.
    """
    report = estimate_distance(box_m, box_n, k, replace(cfg, epsilon=cfg.epsilon / 2))
    same = report.delta_hat < cfg.epsilon / 2
    stats = dict(report.stage_stats)
    stats["delta_hat"] = report.delta_hat
    stats["promise_unchecked"] = True
    params = dict(report.params)
    params["epsilon"] = cfg.epsilon
    if same:
        return Verdict("accept", None, report.query_count, stats, params)
    return Verdict("reject", "distance_estimate", report.query_count, stats, params)
