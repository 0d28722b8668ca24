"""
Tests for the federated loop: selection, local training, aggregation, rounds.
"""

import unittest
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from fedmom.data.dataset import Dataset
from fedmom.data.partition import ClientShard, PartitionConfig, partition_dirichlet
from fedmom.errors import AggregationError, ClientTrainingError, FedMomError, LengthMismatchError
from fedmom.federated.client import ClientUpdate, local_batches, local_train
from fedmom.federated.config import Algorithm, FederationConfig
from fedmom.federated.server import ServerState, aggregate, run_round, select_clients
from fedmom.federated.simulation import FederatedSimulation
from fedmom.metrics.classification import ConfusionMatrix, macro_f1
from fedmom.nn.mlp import MlpArchitecture, init_params, loss_and_grad, predict
from fedmom.optim.momentum import MomentumScheme, OptimizerConfig
from fedmom.seeding import STREAM_SHUFFLE, derive_rng
from tests.helpers import tiny_dataset


def update(client_id, params, momentum, n):
    return ClientUpdate(client_id, np.asarray(params, float), np.asarray(momentum, float), n, 0.0, 1)


def whole_shard(ds, client_id=0):
    return ClientShard(client_id, np.arange(len(ds), dtype=np.int64), ds.class_counts())


class TestFederationConfig(unittest.TestCase):
    """Tests for FederationConfig."""

    def test_for_algorithm_maps_scheme(self):
        self.assertEqual(FederationConfig.for_algorithm("fedavg", 0.1).optimizer.scheme, MomentumScheme.NONE)
        self.assertEqual(FederationConfig.for_algorithm("mfl", 0.1).optimizer.scheme, MomentumScheme.STANDARD)
        self.assertEqual(FederationConfig.for_algorithm("rmfl", 0.1).optimizer.scheme, MomentumScheme.REVERSED)

    def test_rejects_inconsistent_settings(self):
        with self.assertRaises(ValidationError):
            FederationConfig.for_algorithm("mfl", 0.1, num_clients=5, clients_per_round=6)
        with self.assertRaises(ValidationError):
            FederationConfig(
                algorithm=Algorithm.RMFL,
                optimizer=OptimizerConfig(learning_rate=0.1, scheme=MomentumScheme.STANDARD),
            )


class TestAggregate(unittest.TestCase):
    """Tests for sample-weighted aggregation."""

    def test_equal_counts_mean(self):
        params, momentum = aggregate([update(0, [1.0, 2.0], [0.0, 4.0], 5), update(1, [3.0, 6.0], [2.0, 0.0], 5)])
        np.testing.assert_allclose(params, [2.0, 4.0])
        np.testing.assert_allclose(momentum, [1.0, 2.0])

    def test_single_update_identity(self):
        p = np.random.default_rng(0).standard_normal(7)
        m = np.random.default_rng(1).standard_normal(7)
        params, momentum = aggregate([update(3, p, m, 13)])
        np.testing.assert_array_equal(params, p)
        np.testing.assert_array_equal(momentum, m)

    def test_weights_one_three(self):
        a, b = np.array([4.0, 0.0]), np.array([0.0, 8.0])
        params, _ = aggregate([update(0, a, a, 1), update(1, b, b, 3)])
        np.testing.assert_allclose(params, (a + 3 * b) / 4)

    @given(scale=st.integers(1, 1000))
    def test_uniform_rescaling(self, scale):
        ups = [update(i, [float(i), 1.0], [1.0, float(i)], n) for i, n in enumerate([2, 5, 9])]
        scaled = [update(i, u.params, u.momentum, u.num_samples * scale) for i, u in enumerate(ups)]
        np.testing.assert_allclose(aggregate(scaled)[0], aggregate(ups)[0], rtol=1e-12)

    def test_errors(self):
        with self.assertRaises(AggregationError):
            aggregate([])
        with self.assertRaises(LengthMismatchError):
            aggregate([update(0, [1.0, 2.0], [0.0, 0.0], 1), update(1, [1.0], [0.0], 1)])


class TestSelectionAndBatches(unittest.TestCase):
    """Tests for client selection and local mini-batching."""

    def test_select_sorted_unique_deterministic(self):
        cfg = FederationConfig.for_algorithm("mfl", 0.1, num_clients=100, clients_per_round=10, seed=4)
        chosen = select_clients(3, cfg)
        self.assertEqual(len(chosen), 10)
        self.assertEqual(len(set(chosen.tolist())), 10)
        np.testing.assert_array_equal(chosen, np.sort(chosen))
        np.testing.assert_array_equal(chosen, select_clients(3, cfg))
        self.assertFalse(np.array_equal(chosen, select_clients(4, cfg)))

    def test_selection_frequency_is_uniform(self):
        """Over 1000 rounds every client is picked about 10/100 of the time."""
        cfg = FederationConfig.for_algorithm("mfl", 0.1, num_clients=100, clients_per_round=10, seed=0)
        counts = np.zeros(100)
        for rnd in range(1000):
            counts[select_clients(rnd, cfg)] += 1
        frequency = counts / 1000
        self.assertTrue(np.all(np.abs(frequency - 0.1) <= 0.03), frequency)

    def test_select_all(self):
        cfg = FederationConfig.for_algorithm("mfl", 0.1, num_clients=5, clients_per_round=5)
        np.testing.assert_array_equal(select_clients(0, cfg), np.arange(5))

    def test_batches_cover_each_epoch(self):
        indices = np.arange(10, 17, dtype=np.int64)
        batches = list(local_batches(indices, 3, 2, np.random.default_rng(0)))
        self.assertEqual([len(b) for b in batches], [3, 3, 1, 3, 3, 1])
        np.testing.assert_array_equal(np.sort(np.concatenate(batches[:3])), indices)
        np.testing.assert_array_equal(np.sort(np.concatenate(batches[3:])), indices)

    def test_batches_fixed_steps(self):
        indices = np.arange(4, dtype=np.int64)
        batches = list(local_batches(indices, 3, 1, np.random.default_rng(0), max_steps=5))
        self.assertEqual([len(b) for b in batches], [3, 1, 3, 1, 3])


class TestLocalTrain(unittest.TestCase):
    """Tests for local_train."""

    def setUp(self):
        self.ds = tiny_dataset()
        self.arch = MlpArchitecture(self.ds.dim, 5, self.ds.num_classes)
        self.params = init_params(self.arch, 0)
        self.shard = whole_shard(self.ds)

    def test_fedavg_ignores_broadcast_momentum(self):
        cfg = FederationConfig.for_algorithm("fedavg", 0.1, num_clients=1, clients_per_round=1, batch_size=7)
        a = local_train(self.shard, self.ds, self.params, np.zeros_like(self.params), cfg, 0, self.arch)
        b = local_train(self.shard, self.ds, self.params, np.ones_like(self.params), cfg, 0, self.arch)
        np.testing.assert_array_equal(a.params, b.params)
        np.testing.assert_array_equal(a.momentum, 0.0)

    def test_update_fields(self):
        cfg = FederationConfig.for_algorithm(
            "mfl", 0.1, num_clients=1, clients_per_round=1, batch_size=7, local_epochs=2, collect_diagnostics=True
        )
        u = local_train(self.shard, self.ds, self.params, np.zeros_like(self.params), cfg, 0, self.arch)
        self.assertEqual(u.num_samples, 60)
        self.assertEqual(u.num_steps, 2 * 9)
        self.assertEqual(len(u.step_grads), u.num_steps)
        self.assertTrue(np.isfinite(u.train_loss))

    def test_reads_only_shard_rows(self):
        """Rows outside the client's shard never reach the gradient."""
        features = self.ds.features.copy()
        features[30:] = np.nan
        poisoned = Dataset(features, self.ds.labels, self.ds.num_classes)
        shard = ClientShard(0, np.arange(30, dtype=np.int64), np.bincount(self.ds.labels[:30], minlength=3))
        cfg = FederationConfig.for_algorithm("mfl", 0.1, num_clients=1, clients_per_round=1, batch_size=7)
        a = local_train(shard, poisoned, self.params, np.zeros_like(self.params), cfg, 0, self.arch)
        b = local_train(shard, self.ds, self.params, np.zeros_like(self.params), cfg, 0, self.arch)
        np.testing.assert_array_equal(a.params, b.params)
        self.assertEqual(a.num_samples, 30)

    def test_non_finite_gradient_fails_client(self):
        bad = Dataset(np.full((4, self.ds.dim), np.nan), np.array([0, 1, 2, 0]), 3)
        cfg = FederationConfig.for_algorithm("mfl", 0.1, num_clients=1, clients_per_round=1)
        with self.assertRaises(ClientTrainingError) as ctx:
            local_train(whole_shard(bad, 0), bad, self.params, np.zeros_like(self.params), cfg, 3, self.arch)
        self.assertEqual(ctx.exception.client_id, 0)
        self.assertEqual(ctx.exception.round_index, 3)


class TestRounds(unittest.TestCase):
    """Tests for run_round and FederatedSimulation."""

    def setUp(self):
        self.ds = tiny_dataset(num_classes=3, dim=4, per_class=30)
        self.arch = MlpArchitecture(self.ds.dim, 6, self.ds.num_classes)
        self.shards = partition_dirichlet(self.ds, PartitionConfig(num_clients=6, alpha=0.5, seed=1))

    def _cfg(self, algorithm="mfl", **kwargs):
        settings = dict(num_clients=6, clients_per_round=3, local_epochs=1, batch_size=8, rounds=4, seed=2)
        settings.update(kwargs)
        return FederationConfig.for_algorithm(algorithm, 0.1, **settings)

    def test_fedavg_single_client_equals_sgd(self):
        """One client, no momentum: bit-identical to centralized SGD on the same stream."""
        shard = whole_shard(self.ds)
        cfg = FederationConfig.for_algorithm(
            "fedavg", 0.05, num_clients=1, clients_per_round=1, local_epochs=2, batch_size=7, rounds=3, seed=11
        )
        state = ServerState.initial(self.arch, cfg.seed)
        expected = state.global_params.copy()
        for rnd in range(cfg.rounds):
            state, _ = run_round(state, self.ds, [shard], cfg, self.arch)
            rng = derive_rng(cfg.seed, STREAM_SHUFFLE, rnd, 0)
            for batch in local_batches(shard.indices, 7, 2, rng):
                _, grad = loss_and_grad(expected, self.arch, self.ds.features[batch], self.ds.labels[batch])
                expected = expected - 0.05 * grad
            np.testing.assert_array_equal(state.global_params, expected)
        np.testing.assert_array_equal(state.global_momentum, 0.0)

    def test_thread_count_does_not_change_results(self):
        cfg = self._cfg("rmfl")
        runs = []
        for threads in (1, 4):
            sim = FederatedSimulation(self.arch, self.ds, self.shards, cfg, test_set=self.ds, threads=threads)
            runs.append(list(sim.run()))
        for (s1, r1), (s4, r4) in zip(*runs):
            np.testing.assert_array_equal(s1.global_params, s4.global_params)
            np.testing.assert_array_equal(s1.global_momentum, s4.global_momentum)
            self.assertEqual(
                (r1.round, r1.train_loss, r1.test_accuracy, r1.test_macro_f1, r1.clients),
                (r4.round, r4.train_loss, r4.test_accuracy, r4.test_macro_f1, r4.clients),
            )

    def test_mfl_broadcasts_weighted_client_momentum(self):
        cfg = self._cfg("mfl")
        state = ServerState.initial(self.arch, cfg.seed)
        next_state, record = run_round(state, self.ds, self.shards, cfg, self.arch)
        updates = [
            local_train(self.shards[c], self.ds, state.global_params, state.global_momentum, cfg, 0, self.arch)
            for c in record.clients
        ]
        total = sum(u.num_samples for u in updates)
        expected = sum((u.num_samples / total) * u.momentum for u in updates)
        np.testing.assert_allclose(next_state.global_momentum, expected, rtol=1e-12, atol=1e-15)
        self.assertEqual(next_state.round, 1)
        self.assertEqual(record.round, 1)

    def test_mfl_and_rmfl_agree_at_zero_beta(self):
        trajectories = {}
        for algorithm in ("mfl", "rmfl"):
            cfg = FederationConfig.for_algorithm(
                algorithm, 0.1, beta=0.0,
                num_clients=6, clients_per_round=3, local_epochs=1, batch_size=8, rounds=3, seed=2,
            )
            sim = FederatedSimulation(self.arch, self.ds, self.shards, cfg)
            trajectories[algorithm] = [s.global_params for s, _ in sim.run()]
        for a, b in zip(trajectories["mfl"], trajectories["rmfl"]):
            np.testing.assert_array_equal(a, b)

    def test_identical_shards_give_identical_updates(self):
        shards = [ClientShard(i, np.arange(len(self.ds), dtype=np.int64), self.ds.class_counts()) for i in range(3)]
        cfg = FederationConfig.for_algorithm(
            "mfl", 0.1, num_clients=3, clients_per_round=3, local_epochs=1, batch_size=len(self.ds), rounds=1
        )
        state = ServerState.initial(self.arch, 0)
        single = local_train(shards[0], self.ds, state.global_params, state.global_momentum, cfg, 0, self.arch)
        next_state, _ = run_round(state, self.ds, shards, cfg, self.arch)
        np.testing.assert_allclose(next_state.global_params, single.params, rtol=1e-10, atol=1e-12)

    def test_round_past_end(self):
        cfg = self._cfg(rounds=1)
        state = ServerState.initial(self.arch, 0)
        state, _ = run_round(state, self.ds, self.shards, cfg, self.arch)
        with self.assertRaises(FedMomError):
            run_round(state, self.ds, self.shards, cfg, self.arch)

    def test_failing_client_aborts_round(self):
        bad = Dataset(self.ds.features.copy(), self.ds.labels, self.ds.num_classes)
        bad.features[self.shards[0].indices[0]] = np.nan
        cfg = self._cfg(num_clients=6, clients_per_round=6)
        with ThreadPoolExecutor(max_workers=2) as pool:
            with self.assertRaises(ClientTrainingError):
                run_round(ServerState.initial(self.arch, 0), bad, self.shards, cfg, self.arch, executor=pool)

    def test_evaluation_schedule(self):
        cfg = self._cfg(rounds=7)
        sim = FederatedSimulation(self.arch, self.ds, self.shards, cfg, test_set=self.ds, eval_every=3)
        records = [r for _, r in sim.run()]
        self.assertEqual([r.round for r in records], list(range(1, 8)))
        self.assertEqual([r.round for r in records if r.evaluated], [3, 6, 7])
        for r in records:
            if r.evaluated:
                self.assertGreaterEqual(r.test_accuracy, 0.0)
                self.assertLessEqual(r.test_macro_f1, 1.0)

    def test_recorded_metrics_match_confusion_matrix(self):
        cfg = self._cfg(rounds=1)
        server = ServerState.initial(self.arch, 0)
        state, record = run_round(server, self.ds, self.shards, cfg, self.arch, test_set=self.ds)
        predictions = predict(state.global_params, self.arch, self.ds.features)
        cm = ConfusionMatrix.from_predictions(self.ds.labels, predictions, 3)
        self.assertEqual(record.test_accuracy, cm.accuracy())
        self.assertEqual(record.test_macro_f1, macro_f1(cm))

    def test_diagnostics_records(self):
        cfg = self._cfg(local_steps=6, collect_diagnostics=True, rounds=2)
        sim = FederatedSimulation(self.arch, self.ds, self.shards, cfg)
        records = [r for _, r in sim.run()]
        for r in records:
            self.assertEqual([d.step for d in r.divergence], list(range(6)))
            self.assertTrue(all(d.round == r.round for d in r.divergence))
            self.assertTrue(all(-1.0 <= d.mean_cosine <= 1.0 for d in r.divergence))


if __name__ == "__main__":
    unittest.main()
