import numpy as np
import pytest

from driftopt.core.exceptions import InputError
from driftopt.core.features import FeatureMap
from driftopt.core.rng import make_rng
from driftopt.hmm.inference import _log_domain, forward_backward, forward_backward_batch, smooth_labels
from driftopt.hmm.model import HmmParams
from tests.hmm.oracles import enumerate_paths, random_params


@pytest.mark.parametrize("n_states, horizon", [(2, 3), (2, 6), (3, 4), (3, 5)])
def test_forward_backward_matches_path_enumeration(n_states, horizon):
    rng = make_rng(horizon, f"fb-{n_states}")
    for _ in range(5):
        params = random_params(rng, n_states)
        log_emissions = rng.normal(scale=2.0, size=(horizon, n_states))
        table = forward_backward(params, log_emissions)
        posterior, log_likelihood, counts = enumerate_paths(params, log_emissions)
        np.testing.assert_allclose(table.posterior, posterior, atol=1e-10)
        np.testing.assert_allclose(table.transition_counts, counts, atol=1e-10)
        assert table.log_likelihood == pytest.approx(log_likelihood, abs=1e-10)


def test_scaled_and_log_domain_passes_agree():
    rng = make_rng(0, "fb-log")
    params = random_params(rng, 3)
    log_emissions = rng.normal(scale=3.0, size=(40, 3))
    scaled = forward_backward(params, log_emissions)
    logged = _log_domain(params.initial, params.transition, log_emissions)
    np.testing.assert_allclose(scaled.posterior, logged.posterior, atol=1e-10)
    np.testing.assert_allclose(scaled.log_forward, logged.log_forward, atol=1e-8)
    np.testing.assert_allclose(scaled.log_backward, logged.log_backward, atol=1e-8)
    assert scaled.log_likelihood == pytest.approx(logged.log_likelihood)


def test_batched_pass_matches_single_passes():
    rng = make_rng(2, "fb-batch")
    params = [random_params(rng, 3) for _ in range(4)]
    log_emissions = [rng.normal(scale=3.0, size=(60, 3)) for _ in params]
    # the second chain underflows in the scaled pass and takes the log-domain path
    params[1] = HmmParams(
        initial=np.array([1.0, 0.0, 0.0]),
        transition=np.eye(3),
        beta=params[1].beta,
        sigma=params[1].sigma,
        feature_map=params[1].feature_map,
    )
    log_emissions[1][:, 0] = -2000.0
    batched = forward_backward_batch(params, log_emissions)
    for p, le, table in zip(params, log_emissions, batched):
        single = _log_domain(p.initial, p.transition, le)
        np.testing.assert_allclose(table.posterior, single.posterior, atol=1e-10)
        np.testing.assert_allclose(table.transition_counts, single.transition_counts, atol=1e-9)
        assert table.log_likelihood == pytest.approx(single.log_likelihood, abs=1e-8)


def test_long_sequences_do_not_underflow():
    rng = make_rng(1, "fb-long")
    params = random_params(rng, 2)
    log_emissions = rng.normal(loc=-50.0, scale=5.0, size=(5000, 2))
    table = forward_backward(params, log_emissions)
    assert np.isfinite(table.log_likelihood)
    np.testing.assert_allclose(table.posterior.sum(axis=1), 1.0)


def test_zero_transition_falls_back_to_log_domain():
    params = HmmParams(
        initial=np.array([1.0, 0.0]),
        transition=np.array([[1.0, 0.0], [0.0, 1.0]]),
        beta=np.zeros((2, 2)),
        sigma=1.0,
        feature_map=FeatureMap.context_free(2),
    )
    log_emissions = np.array([[-1000.0, 0.0], [-1000.0, 0.0]])
    table = forward_backward(params, log_emissions)
    np.testing.assert_allclose(table.posterior, [[1.0, 0.0], [1.0, 0.0]])
    assert table.log_likelihood == pytest.approx(-2000.0)


def test_single_state_posterior_is_one(helpers):
    params = HmmParams(
        initial=np.ones(1),
        transition=np.ones((1, 1)),
        beta=np.array([[0.2, 0.8]]),
        sigma=0.5,
        feature_map=FeatureMap.context_free(2),
    )
    data = helpers.make_dataset([0, 1, 1], [0.1, 0.9, 0.4], [0.5, 0.5, 0.5])
    labels, table = smooth_labels(params, data)
    np.testing.assert_array_equal(table.posterior, np.ones((3, 1)))
    assert (labels.labels == 0).all()


def test_identical_states_give_flat_posterior(helpers):
    params = HmmParams(
        initial=np.array([0.5, 0.5]),
        transition=np.array([[0.7, 0.3], [0.3, 0.7]]),
        beta=np.array([[0.3, 0.6], [0.3, 0.6]]),
        sigma=0.5,
        feature_map=FeatureMap.context_free(2),
    )
    data = helpers.make_dataset([0, 1, 0, 1], [0.1, 2.0, -1.0, 0.5], [0.5] * 4)
    _, table = smooth_labels(params, data)
    np.testing.assert_allclose(table.posterior, 0.5)


def test_smooth_labels_follow_rewards(helpers, two_state_params):
    # action 1 pays 1 in state 0, action 0 pays 1 in state 1
    data = helpers.make_dataset([1] * 10 + [0] * 10, [1.0] * 20, [0.5] * 20)
    labels, _ = smooth_labels(two_state_params, data)
    np.testing.assert_array_equal(labels.labels, [0] * 10 + [1] * 10)


def test_non_finite_emissions_are_rejected(two_state_params):
    with pytest.raises(InputError):
        forward_backward(two_state_params, np.array([[0.0, -np.inf]]))
    with pytest.raises(InputError):
        forward_backward(two_state_params, np.zeros((0, 2)))
