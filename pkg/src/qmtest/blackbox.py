"""Simulated black-box measurement device and its query-level samplers.

The device hides a measurement and exposes only the entangled-input query:
each query feeds half of a maximally entangled state to the hidden
measurement, yielding an outcome index with probability p(M_i) and leaving
the normalized vectorized operator as the post-measurement state.  Follow-up
measurements on that post-state (Pauli-basis labels, single-site signs,
symmetry-adapted checks) are sampled from their exact distributions computed
out of the hidden operators; post-states are never materialized.

Aggregate sampling replaces runs of i.i.d. queries by exact multinomial or
binomial draws; it is distributionally identical to the per-trial path and
makes the published sample sizes (up to ~1e12) feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pauli, schur
from .core import Measurement, ZeroOperator, hs_inner, normalized_choi


def chernoff_samples(epsilon: float, delta: float) -> int:
    """Smallest n with 2 exp(-2 n eps^2) <= delta; 0 when the bound is vacuous."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if delta >= 2:
        return 0
    if delta <= 0:
        raise ValueError("delta must be positive")
    return math.ceil(math.log(2.0 / delta) / (2.0 * epsilon**2))


def swap_test_sample(overlap: float, rng: np.random.Generator) -> int:
    """One controlled-swap interference bit: 0 with probability (1+overlap^2)/2."""
    if not 0.0 <= overlap <= 1.0 + 1e-12:
        raise ValueError(f"overlap {overlap} outside [0, 1]")
    p0 = (1.0 + min(overlap, 1.0) ** 2) / 2.0
    return 0 if rng.random() < p0 else 1


def swap_test_zero_count(copies: int, overlap: float, rng: np.random.Generator) -> int:
    """Aggregate draw: number of 0 outcomes among ``copies`` swap tests."""
    p0 = (1.0 + min(max(overlap, 0.0), 1.0) ** 2) / 2.0
    return int(rng.binomial(copies, p0))


def aggregate_multinomial(L: int, probs, rng: np.random.Generator) -> np.ndarray:
    """Exact multinomial counts for L categorical draws.

    Backed by the generator's conditional-binomial chain; no normal
    approximation is involved, so the counts are exchangeable with L
    individual draws.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < -1e-12):
        raise ValueError("negative probability")
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if not math.isclose(total, 1.0, abs_tol=1e-9):
        raise ValueError(f"probabilities sum to {total}")
    if L == 0:
        return np.zeros(probs.size, dtype=np.int64)
    return rng.multinomial(L, probs / total)


@dataclass(frozen=True)
class ChoiSample:
    """Outcome of one entangled query; the post-state resolves lazily."""

    outcome: int
    _box: "BlackBox"

    def post_state(self) -> np.ndarray:
        """Normalized post-measurement vector (simulator-side convenience)."""
        return normalized_choi(self._box._hidden.operators[self.outcome])


class BlackBox:
    """Opaque measurement device with query accounting and a seeded stream.

    Testers interact only through the sampling methods; the hidden measurement
    is an implementation detail of the simulation.  ``d`` must be supplied for
    the label-level samplers (the hidden dimension must be a power of d).
    """

    def __init__(self, measurement: Measurement, seed=None, d: int | None = None):
        self._hidden = measurement
        self.rng = np.random.default_rng(seed)
        self.query_count = 0
        self.d = d
        self.n = pauli._power_check(measurement.dim, d) if d is not None else None
        self._choi_probs: np.ndarray | None = None
        self._q_dists: dict[int, np.ndarray] = {}
        self._sign_probs: dict[tuple, float] = {}
        self._schur_cache: dict[int, tuple[float, dict]] = {}

    @property
    def dim(self) -> int:
        return self._hidden.dim

    @property
    def num_outcomes(self) -> int:
        return len(self._hidden)

    def choi_probs(self) -> np.ndarray:
        """Outcome law of the entangled query: p(M_i) = |M_i|_F^2/D."""
        if self._choi_probs is None:
            p = self._hidden.outcome_probs()
            self._choi_probs = p / p.sum()
        return self._choi_probs

    def query_on_choi(self) -> ChoiSample:
        """One entangled query; increments the counter by one."""
        i = int(self.rng.choice(self.num_outcomes, p=self.choi_probs()))
        self.query_count += 1
        return ChoiSample(outcome=i, _box=self)

    def query_batch(self, L: int) -> np.ndarray:
        """L per-trial queries at once; returns the outcome sequence."""
        out = self.rng.choice(self.num_outcomes, size=L, p=self.choi_probs())
        self.query_count += L
        return out

    def sample_outcome_counts(self, L: int) -> np.ndarray:
        """Aggregate draw of outcome counts for L queries."""
        counts = aggregate_multinomial(L, self.choi_probs(), self.rng)
        self.query_count += L
        return counts

    def _require_label_space(self):
        if self.d is None:
            raise ValueError("construct the box with d to use label-level samplers")

    def q_distribution(self, outcome: int) -> np.ndarray:
        """Pauli-label law of the post-state for the given outcome."""
        self._require_label_space()
        if outcome not in self._q_dists:
            op = self._hidden.operators[outcome]
            self._q_dists[outcome] = pauli.q_distribution(op, self.d, self.n)
        return self._q_dists[outcome]

    def measure_choi_pauli_basis(self, sample: ChoiSample) -> pauli.PauliLabel:
        """Measure the sample's post-state in the vectorized-Pauli basis."""
        q = self.q_distribution(sample.outcome)
        idx = int(self.rng.choice(q.size, p=q))
        return pauli.label_from_index(idx, self.d, self.n)

    def sample_label_counts(self, outcome: int, T: int) -> np.ndarray:
        """Aggregate label counts for T Pauli-basis measurements on one branch."""
        return aggregate_multinomial(T, self.q_distribution(outcome), self.rng)

    def label_batch(self, outcome: int, T: int) -> np.ndarray:
        """T per-trial label draws (as label indices) for one branch."""
        return self.rng.choice(self.q_distribution(outcome).size, size=T,
                               p=self.q_distribution(outcome))

    def joint_label_distribution(self) -> np.ndarray:
        """Law of (outcome, then label) marginalized to labels: sum_i |mu(M_i)|^2."""
        self._require_label_space()
        if not hasattr(self, "_xi"):
            self._xi = pauli.xi_distribution(self._hidden, self.d, self.n)
        return self._xi

    def sample_joint_label_counts(self, L: int) -> np.ndarray:
        """Aggregate label counts for L query-then-label rounds; charges L queries."""
        counts = aggregate_multinomial(L, self.joint_label_distribution(), self.rng)
        self.query_count += L
        return counts

    def sign_plus_prob(self, outcome: int, label: pauli.PauliLabel) -> float:
        """Probability that the sitewise sign product comes out +1.

        Equals tr(P_plus(a,b) M_i M_i^dag) / tr(M_i^dag M_i) where P_plus
        projects on the +1 eigenspace of the labelled Pauli operator.
        """
        self._require_label_space()
        if self.d != 2:
            raise ValueError("sign measurement is defined for qubits only")
        key = (outcome, label.x, label.z)
        if key not in self._sign_probs:
            op = self._hidden.operators[outcome]
            sigma = pauli.pauli_matrix(label)
            num = float(np.trace((np.eye(self.dim) + sigma) / 2 @ op @ op.conj().T).real)
            den = float(np.trace(op.conj().T @ op).real)
            if den < 1e-14:
                raise ZeroOperator("sign distribution undefined for a zero operator")
            self._sign_probs[key] = min(max(num / den, 0.0), 1.0)
        return self._sign_probs[key]

    def measure_stabilizer_sign(self, sample: ChoiSample, label: pauli.PauliLabel) -> int:
        """Sitewise sign product of single-qubit Pauli measurements: +1 or -1."""
        p_plus = self.sign_plus_prob(sample.outcome, label)
        return 1 if self.rng.random() < p_plus else -1

    def schur_audit(self, basis: schur.SchurBasis):
        """Pass probability and per-(shape, outcome) event probabilities."""
        key = id(basis)
        if key not in self._schur_cache:
            events: dict[tuple, float] = {}
            total = 0.0
            for i, op in enumerate(self._hidden.operators):
                per_shape = schur.block_decompose(op, basis).per_lambda_hat
                for shape, collective in per_shape.items():
                    _, _, v = basis.blocks[shape]
                    prob = v / basis.D * float(np.vdot(collective, collective).real)
                    events[(shape, i)] = prob
                    total += prob
            self._schur_cache[key] = (min(total, 1.0), events)
        return self._schur_cache[key]

    def schur_pass_prob(self, basis: schur.SchurBasis) -> float:
        return self.schur_audit(basis)[0]

    def schur_iteration(self, basis: schur.SchurBasis) -> bool:
        """One full symmetry-check iteration (query, transform, compare, measure).

        Passes exactly when the two block labels agree and the permutation
        registers land on the identity basis operator; the combined pass
        probability is (1/D) sum_i |hat(M_i)|^2.
        """
        passed = self.rng.random() < self.schur_pass_prob(basis)
        self.query_count += 1
        return passed


def hidden_choi_overlap(box_m: BlackBox, box_n: BlackBox, outcome: int) -> float:
    """|<v~(M_i)|v~(N_i)>| from the hidden operators.

    Simulator privilege: drives swap-test draws without materializing
    tensor-power states.  Tester logic never reads this directly; it only
    consumes the resulting samples.
    """
    a = box_m._hidden.operator(outcome)
    b = box_n._hidden.operator(outcome)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < 1e-14 or nb < 1e-14:
        raise ZeroOperator("overlap undefined when an operator vanishes")
    return min(abs(hs_inner(a, b)) / (na * nb), 1.0)


def paired_swap_zeros(box_m: BlackBox, box_n: BlackBox, outcome: int, copies: int,
                      rng: np.random.Generator, per_trial: bool = False) -> int:
    """Zero-outcome count of swap tests on matching post-states of two boxes.

    The interference probability comes from the hidden operators; callers see
    only the sampled count, never the overlap itself.
    """
    overlap = hidden_choi_overlap(box_m, box_n, outcome)
    p0 = (1.0 + overlap**2) / 2.0
    if per_trial:
        return int((rng.random(copies) < p0).sum())
    return int(rng.binomial(copies, p0))
