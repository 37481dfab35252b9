"""Forward-backward smoothing for :class:`HmmParams`.

The latent chain starts with z_1 ~ P0 and emits at every round including the first.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from driftopt.core.data import LatentSequence, LoggedDataset
from driftopt.core.exceptions import InputError
from driftopt.hmm.model import HmmParams, data_log_density


@dataclass(frozen=True)
class PosteriorTable:
    """Forward/backward messages in the log domain and smoothed posteriors.

    ``log_forward[t, z]`` is log P(r_1..r_t, z_t = z), ``log_backward[t, z]`` is
    log P(r_{t+1}..r_T | z_t = z) and ``posterior[t]`` is Q_t. ``transition_counts``
    holds the expected number of z -> z' transitions.
    """

    log_forward: np.ndarray
    log_backward: np.ndarray
    posterior: np.ndarray
    log_likelihood: float
    transition_counts: np.ndarray

    def labels(self) -> LatentSequence:
        # np.argmax keeps the smallest state index on ties.
        return LatentSequence(np.argmax(self.posterior, axis=1), self.posterior.shape[1])


def _log_domain(initial: np.ndarray, transition: np.ndarray, log_emissions: np.ndarray) -> PosteriorTable:
    T, L = log_emissions.shape
    with np.errstate(divide="ignore"):
        log_initial = np.log(initial)
        log_transition = np.log(transition)
    log_alpha = np.empty((T, L))
    log_beta = np.zeros((T, L))
    log_alpha[0] = log_initial + log_emissions[0]
    for t in range(1, T):
        log_alpha[t] = logsumexp(log_alpha[t - 1][:, None] + log_transition, axis=0) + log_emissions[t]
    for t in range(T - 2, -1, -1):
        log_beta[t] = logsumexp(log_transition + (log_emissions[t + 1] + log_beta[t + 1])[None, :], axis=1)
    log_likelihood = float(logsumexp(log_alpha[-1]))
    if not np.isfinite(log_likelihood):
        raise InputError("Observations have zero probability under the HMM")
    posterior = np.exp(log_alpha + log_beta - log_likelihood)
    posterior /= posterior.sum(axis=1, keepdims=True)
    if T > 1:
        log_xi = (
            log_alpha[:-1, :, None]
            + log_transition[None, :, :]
            + (log_emissions[1:] + log_beta[1:])[:, None, :]
            - log_likelihood
        )
        counts = np.exp(logsumexp(log_xi, axis=0))
    else:
        counts = np.zeros((L, L))
    return PosteriorTable(log_alpha, log_beta, posterior, log_likelihood, counts)


def _scaled_passes(initial: np.ndarray, transition: np.ndarray, log_emissions: np.ndarray) -> list[PosteriorTable | None]:
    """Scaled forward-backward for R chains at once.

    ``initial`` is (R, L), ``transition`` (R, L, L) and ``log_emissions`` (R, T, L).
    A chain whose scaled forward pass underflows comes back as ``None``.
    """
    R, T, L = log_emissions.shape
    stacked = np.ascontiguousarray(log_emissions.transpose(1, 0, 2))
    shift = stacked.max(axis=2)
    emissions = np.exp(stacked - shift[..., None])
    alpha = np.empty((T, R, L))
    scale = np.empty((T, R))

    with np.errstate(divide="ignore", invalid="ignore"):
        a = initial * emissions[0]
        scale[0] = a.sum(axis=1)
        alpha[0] = a / scale[0][:, None]
        for t in range(1, T):
            a = np.matmul(alpha[t - 1][:, None, :], transition)[:, 0, :] * emissions[t]
            c = a.sum(axis=1)
            scale[t] = c
            alpha[t] = a / c[:, None]
    ok = np.all(scale > 0, axis=0)

    beta = np.ones((T, R, L))
    with np.errstate(divide="ignore", invalid="ignore"):
        weighted = emissions[1:] / scale[1:, :, None]
        for t in range(T - 2, -1, -1):
            beta[t] = np.matmul(transition, (weighted[t] * beta[t + 1])[:, :, None])[:, :, 0]

        log_scale = np.log(scale) + shift
        cumulative = np.cumsum(log_scale, axis=0)
        log_forward = np.log(alpha) + cumulative[..., None]
        log_backward = np.log(beta) + (cumulative[-1][None, :] - cumulative)[..., None]
        posterior = alpha * beta
        posterior /= posterior.sum(axis=2, keepdims=True)
        if T > 1:
            counts = transition * np.einsum("tri,trj->rij", alpha[:-1], weighted * beta[1:])
        else:
            counts = np.zeros((R, L, L))

    return [
        PosteriorTable(
            np.ascontiguousarray(log_forward[:, r]),
            np.ascontiguousarray(log_backward[:, r]),
            np.ascontiguousarray(posterior[:, r]),
            float(cumulative[-1, r]),
            counts[r],
        )
        if ok[r]
        else None
        for r in range(R)
    ]


def _check_emissions(log_emissions) -> np.ndarray:
    log_emissions = np.asarray(log_emissions, dtype=float)
    if not np.all(np.isfinite(log_emissions)):
        raise InputError("Emission log densities must be finite")
    if log_emissions.shape[0] == 0:
        raise InputError("Cannot smooth an empty sequence")
    return log_emissions


def forward_backward(params: HmmParams, log_emissions: np.ndarray) -> PosteriorTable:
    """Scaled forward-backward with per-step normalization.

    Falls back to a pure log-domain pass if a scaled step underflows.
    """
    return forward_backward_batch([params], [log_emissions])[0]


def forward_backward_batch(params: list[HmmParams], log_emissions: list[np.ndarray]) -> list[PosteriorTable]:
    """:func:`forward_backward` for several models over the same rounds, one scaled pass for all."""
    if len(params) != len(log_emissions):
        raise InputError(f"Got {len(params)} models for {len(log_emissions)} emission tables")
    tables = np.stack([_check_emissions(le) for le in log_emissions])
    initial = np.stack([p.initial for p in params])
    transition = np.stack([p.transition for p in params])
    passes = _scaled_passes(initial, transition, tables)
    return [
        table if table is not None else _log_domain(initial[r], transition[r], tables[r])
        for r, table in enumerate(passes)
    ]



def smooth_labels(params: HmmParams, data: LoggedDataset) -> tuple[LatentSequence, PosteriorTable]:
    """Most probable state of every round under the smoothed posterior Q_t."""
    table = forward_backward(params, data_log_density(params, data))
    return table.labels(), table
