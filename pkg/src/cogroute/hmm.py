"""Discrete-observation first-order hidden Markov models.

Provides evaluation (scaled forward pass), decoding (Viterbi), training
(Baum-Welch EM with an additive smoothing floor) and one-step-ahead
observation prediction. All functions are pure: they never mutate their
inputs and identical inputs give bit-identical outputs.

The ``*_batch`` helpers run the same recursions vectorized across many
independent models that share (n_states, n_symbols) and observe sequences
of equal length. They exist so that a simulation tracking hundreds of
small models stays fast; results match the single-model functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-9
SMOOTHING_FLOOR = 1e-6


@dataclass(eq=False)
class HmmModel:
    """Model parameters: transition matrix, emission matrix, initial distribution.

    transition[i, j] is the probability of moving from hidden state i to j,
    emission[j, k] the probability of emitting symbol k while in state j,
    and initial[i] the probability of starting in state i.
    """

    n_states: int
    n_symbols: int
    transition: np.ndarray
    emission: np.ndarray
    initial: np.ndarray

    def validate(self) -> None:
        """Raise ValueError unless all stochasticity invariants hold."""
        if self.n_states < 1:
            raise ValueError("n_states must be >= 1")
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be >= 1")
        if self.transition.shape != (self.n_states, self.n_states):
            raise ValueError("transition matrix shape mismatch")
        if self.emission.shape != (self.n_states, self.n_symbols):
            raise ValueError("emission matrix shape mismatch")
        if self.initial.shape != (self.n_states,):
            raise ValueError("initial vector shape mismatch")
        for name, arr in (("transition", self.transition),
                          ("emission", self.emission)):
            if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
                raise ValueError(f"{name} entries must lie in [0, 1]")
            if np.max(np.abs(arr.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
                raise ValueError(f"{name} rows must sum to 1")
        if np.any(self.initial < -1e-12) or np.any(self.initial > 1 + 1e-12):
            raise ValueError("initial entries must lie in [0, 1]")
        if abs(self.initial.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError("initial must sum to 1")


@dataclass(eq=False)
class StatePath:
    """A decoded hidden-state sequence and its joint log probability."""

    states: np.ndarray
    log_probability: float


def init_model(n_states: int, n_symbols: int, rng_seed: int) -> HmmModel:
    """Build a model whose rows are random perturbations of uniform.

    Each entry is drawn uniformly from [0.5, 1.5] and the row is then
    normalized, so every probability is strictly positive. Deterministic
    in rng_seed.
    """
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if n_symbols < 2:
        raise ValueError("n_symbols must be >= 2")
    rng = np.random.default_rng(rng_seed)

    def rows(shape):
        m = rng.uniform(0.5, 1.5, size=shape)
        return m / m.sum(axis=-1, keepdims=True)

    return HmmModel(
        n_states=n_states,
        n_symbols=n_symbols,
        transition=rows((n_states, n_states)),
        emission=rows((n_states, n_symbols)),
        initial=rows(n_states),
    )


def _check_obs(model: HmmModel, obs) -> np.ndarray:
    seq = np.asarray(obs, dtype=np.int64)
    if seq.ndim != 1 or seq.size < 1:
        raise ValueError("observation sequence must be a non-empty 1-d sequence")
    if np.any(seq < 0) or np.any(seq >= model.n_symbols):
        raise ValueError("observation symbol out of range for this model")
    return seq


def _scaled_forward(transition, emission, initial, seq):
    """Forward recursion with per-step normalization.

    Returns (alphas, scales, log_likelihood). Steps with zero probability
    mass get a uniform alpha row and a zero scale, which makes the
    log-likelihood -inf without poisoning later rows with NaN.
    """
    n = transition.shape[0]
    t_len = seq.shape[0]
    alphas = np.empty((t_len, n))
    scales = np.empty(t_len)
    cur = initial * emission[:, seq[0]]
    for t in range(t_len):
        if t > 0:
            cur = (alphas[t - 1] @ transition) * emission[:, seq[t]]
        mass = cur.sum()
        if mass > 0.0:
            alphas[t] = cur / mass
        else:
            alphas[t] = 1.0 / n
        scales[t] = mass
    if np.all(scales > 0.0):
        log_likelihood = float(np.log(scales).sum())
    else:
        log_likelihood = float("-inf")
    return alphas, scales, log_likelihood


def _scaled_backward(transition, emission, seq, scales):
    """Backward recursion matching _scaled_forward's scaling convention."""
    n = transition.shape[0]
    t_len = seq.shape[0]
    betas = np.empty((t_len, n))
    betas[t_len - 1] = 1.0
    for t in range(t_len - 2, -1, -1):
        nxt = emission[:, seq[t + 1]] * betas[t + 1]
        betas[t] = transition @ nxt
        if scales[t + 1] > 0.0:
            betas[t] /= scales[t + 1]
    return betas


def forward(model: HmmModel, obs) -> tuple[np.ndarray, float]:
    """Scaled forward pass.

    Returns the T x N matrix of per-step normalized alpha rows (each row
    sums to 1) and log P(obs | model). A history that is impossible under
    the model yields -inf rather than an exception.
    """
    seq = _check_obs(model, obs)
    alphas, _, log_likelihood = _scaled_forward(
        model.transition, model.emission, model.initial, seq)
    return alphas, log_likelihood


def viterbi(model: HmmModel, obs) -> StatePath:
    """Most probable hidden state path, computed in log space.

    Ties are broken toward the lower state index at every backtrack step,
    so results are reproducible across platforms. If every path has
    probability zero the log probability is -inf and the tie-break path
    is returned.
    """
    seq = _check_obs(model, obs)
    n = model.n_states
    t_len = seq.shape[0]
    with np.errstate(divide="ignore"):
        log_a = np.log(model.transition)
        log_b = np.log(model.emission)
        log_p = np.log(model.initial)

    delta = np.empty((t_len, n))
    psi = np.zeros((t_len, n), dtype=np.int64)
    delta[0] = log_p + log_b[:, seq[0]]
    for t in range(1, t_len):
        scores = delta[t - 1][:, None] + log_a
        psi[t] = np.argmax(scores, axis=0)
        delta[t] = scores[psi[t], np.arange(n)] + log_b[:, seq[t]]

    states = np.empty(t_len, dtype=np.int64)
    states[t_len - 1] = int(np.argmax(delta[t_len - 1]))
    for t in range(t_len - 2, -1, -1):
        states[t] = psi[t + 1, states[t + 1]]
    return StatePath(states=states, log_probability=float(delta[t_len - 1].max()))


def _smooth_rows(rows: np.ndarray, floor: float = SMOOTHING_FLOOR) -> np.ndarray:
    """Add a small floor to every entry of each row, then renormalize."""
    lifted = rows + floor
    return lifted / lifted.sum(axis=-1, keepdims=True)


def _sequence_stats(transition, emission, initial, seq):
    """E-step statistics for one sequence; None if the sequence is impossible."""
    alphas, scales, log_likelihood = _scaled_forward(
        transition, emission, initial, seq)
    if not np.isfinite(log_likelihood):
        return None, log_likelihood
    betas = _scaled_backward(transition, emission, seq, scales)
    gamma = alphas * betas
    weights = (emission[:, seq[1:]].T * betas[1:]) / scales[1:, None]
    xi_sum = transition * (alphas[:-1].T @ weights)
    return (gamma, xi_sum), log_likelihood


def baum_welch(model: HmmModel, obs_seqs, max_iters: int = 100,
               tol: float = 1e-6) -> tuple[HmmModel, list[float]]:
    """Multi-sequence Baum-Welch re-estimation.

    Iterates until the total log-likelihood improves by less than tol or
    max_iters is reached. The returned trace holds the log-likelihood of
    the model at the start of each iteration and is non-decreasing up to
    numerical slack. Rows that receive zero expected mass keep their
    previous values; re-estimated rows get an additive smoothing floor of
    1e-6 and are renormalized, which keeps every probability positive.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    seqs = [_check_obs(model, s) for s in obs_seqs]
    if not seqs:
        raise ValueError("at least one observation sequence is required")
    if max(s.size for s in seqs) < 2:
        raise ValueError("at least one sequence must have length >= 2")

    n, m = model.n_states, model.n_symbols
    transition = model.transition.astype(float).copy()
    emission = model.emission.astype(float).copy()
    initial = model.initial.astype(float).copy()
    trace: list[float] = []

    for _ in range(max_iters):
        trans_num = np.zeros((n, n))
        trans_den = np.zeros(n)
        emit_num = np.zeros((n, m))
        emit_den = np.zeros(n)
        init_num = np.zeros(n)
        total_ll = 0.0
        for seq in seqs:
            stats, log_likelihood = _sequence_stats(
                transition, emission, initial, seq)
            total_ll += log_likelihood
            if stats is None:
                continue
            gamma, xi_sum = stats
            init_num += gamma[0]
            trans_num += xi_sum
            trans_den += gamma[:-1].sum(axis=0)
            for k in range(m):
                emit_num[:, k] += gamma[seq == k].sum(axis=0)
            emit_den += gamma.sum(axis=0)

        trace.append(total_ll)
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            break

        for i in range(n):
            if trans_den[i] > 0.0:
                transition[i] = _smooth_rows(trans_num[i] / trans_den[i])
            if emit_den[i] > 0.0:
                emission[i] = _smooth_rows(emit_num[i] / emit_den[i])
        if init_num.sum() > 0.0:
            initial = _smooth_rows(init_num / init_num.sum())

    result = HmmModel(n_states=n, n_symbols=m, transition=transition,
                      emission=emission, initial=initial)
    result.validate()
    return result, trace


def predict_next_symbol(model: HmmModel, obs) -> tuple[int, np.ndarray]:
    """Posterior predictive distribution of the next observation symbol.

    Propagates the filtered state distribution one step through the
    transition matrix and projects it through the emissions. A zero
    likelihood history falls back to propagating the initial distribution
    instead, so noisy inputs never raise. Ties in the argmax go to the
    lower symbol.
    """
    seq = _check_obs(model, obs)
    alphas, _, log_likelihood = _scaled_forward(
        model.transition, model.emission, model.initial, seq)
    filtered = alphas[-1] if np.isfinite(log_likelihood) else model.initial
    predicted_state = filtered @ model.transition
    distribution = predicted_state @ model.emission
    return int(np.argmax(distribution)), distribution


# --- batched counterparts -------------------------------------------------
#
# Lane layout: every array carries a leading axis of size L, one lane per
# (model, sequence) pair. All lanes share n_states, n_symbols and sequence
# length. The math mirrors the single-model functions above.

def filter_batch(transitions: np.ndarray, emissions: np.ndarray,
                 initials: np.ndarray, obs: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Final filtered state distribution per lane.

    Returns (filtered, log_likelihoods), each with leading lane axis.
    Lanes whose sequence is impossible fall back to the lane's initial
    distribution with a -inf log-likelihood.
    """
    lanes, t_len = obs.shape
    lane_idx = np.arange(lanes)
    cur = initials * emissions[lane_idx, :, obs[:, 0]]
    log_likelihoods = np.zeros(lanes)
    dead = np.zeros(lanes, dtype=bool)
    for t in range(t_len):
        if t > 0:
            cur = np.einsum("li,lij->lj", cur, transitions)
            cur = cur * emissions[lane_idx, :, obs[:, t]]
        mass = cur.sum(axis=1)
        ok = mass > 0.0
        dead |= ~ok
        safe = np.where(ok, mass, 1.0)
        cur = cur / safe[:, None]
        with np.errstate(divide="ignore"):
            log_likelihoods += np.where(ok, np.log(safe), float("-inf"))
    filtered = np.where(dead[:, None], initials, cur)
    return filtered, log_likelihoods


def predict_from_filtered(transitions: np.ndarray, emissions: np.ndarray,
                          filtered: np.ndarray
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Next-symbol argmax and distribution per lane from filtered states."""
    predicted_state = np.einsum("li,lij->lj", filtered, transitions)
    distributions = np.einsum("lj,ljm->lm", predicted_state, emissions)
    return np.argmax(distributions, axis=1), distributions


def _forward_backward_batch(transitions, emissions, initials, obs):
    lanes, t_len = obs.shape
    n = transitions.shape[1]
    lane_idx = np.arange(lanes)
    alphas = np.empty((lanes, t_len, n))
    scales = np.empty((lanes, t_len))
    cur = initials * emissions[lane_idx, :, obs[:, 0]]
    for t in range(t_len):
        if t > 0:
            cur = np.einsum("li,lij->lj", alphas[:, t - 1], transitions)
            cur = cur * emissions[lane_idx, :, obs[:, t]]
        mass = cur.sum(axis=1)
        ok = mass > 0.0
        safe = np.where(ok, mass, 1.0)
        alphas[:, t] = np.where(ok[:, None], cur / safe[:, None], 1.0 / n)
        scales[:, t] = mass

    betas = np.empty((lanes, t_len, n))
    betas[:, t_len - 1] = 1.0
    for t in range(t_len - 2, -1, -1):
        nxt = emissions[lane_idx, :, obs[:, t + 1]] * betas[:, t + 1]
        step = np.einsum("lij,lj->li", transitions, nxt)
        scale = scales[:, t + 1]
        safe = np.where(scale > 0.0, scale, 1.0)
        betas[:, t] = step / safe[:, None]

    valid = np.all(scales > 0.0, axis=1)
    with np.errstate(divide="ignore"):
        log_likelihoods = np.where(
            valid, np.log(np.where(scales > 0.0, scales, 1.0)).sum(axis=1),
            float("-inf"))
    return alphas, betas, scales, log_likelihoods, valid


def baum_welch_batch(transitions: np.ndarray, emissions: np.ndarray,
                     initials: np.ndarray, obs: np.ndarray,
                     max_iters: int = 100, tol: float = 1e-6
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Baum-Welch over many independent (model, sequence) lanes at once.

    Per lane this matches baum_welch(model, [seq], max_iters, tol): the
    same smoothing floor, the same zero-mass row handling and the same
    early stop once a lane's improvement drops below tol.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lanes, t_len = obs.shape
    if t_len < 2:
        raise ValueError("sequences must have length >= 2")
    n = transitions.shape[1]
    m = emissions.shape[2]
    transitions = transitions.astype(float).copy()
    emissions = emissions.astype(float).copy()
    initials = initials.astype(float).copy()

    onehot = np.zeros((lanes, t_len, m))
    lane_idx = np.arange(lanes)[:, None]
    onehot[lane_idx, np.arange(t_len)[None, :], obs] = 1.0

    active = np.ones(lanes, dtype=bool)
    prev_ll = np.full(lanes, np.nan)
    for iteration in range(max_iters):
        alphas, betas, scales, log_likelihoods, valid = \
            _forward_backward_batch(transitions, emissions, initials, obs)
        if iteration > 0:
            improvement = log_likelihoods - prev_ll
            active &= ~(improvement < tol)
        prev_ll = log_likelihoods
        update = active & valid
        if not np.any(update):
            if not np.any(active):
                break
            continue

        gamma = alphas * betas
        safe_scales = np.where(scales[:, 1:] > 0.0, scales[:, 1:], 1.0)
        weights = (emissions[np.arange(lanes)[:, None, None],
                             np.arange(n)[None, None, :],
                             obs[:, 1:, None]]
                   * betas[:, 1:]) / safe_scales[:, :, None]
        xi_sum = transitions * np.einsum("lti,ltj->lij",
                                         alphas[:, :-1], weights)
        trans_den = gamma[:, :-1].sum(axis=1)
        emit_num = np.einsum("ltn,ltm->lnm", gamma, onehot)
        emit_den = gamma.sum(axis=1)

        trans_rows = update[:, None] & (trans_den > 0.0)
        trans_new = _smooth_rows(
            xi_sum / np.where(trans_den > 0.0, trans_den, 1.0)[:, :, None])
        transitions = np.where(trans_rows[:, :, None], trans_new, transitions)

        emit_rows = update[:, None] & (emit_den > 0.0)
        emit_new = _smooth_rows(
            emit_num / np.where(emit_den > 0.0, emit_den, 1.0)[:, :, None])
        emissions = np.where(emit_rows[:, :, None], emit_new, emissions)

        init_new = _smooth_rows(gamma[:, 0])
        initials = np.where(update[:, None], init_new, initials)

    return transitions, emissions, initials
