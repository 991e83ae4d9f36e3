import numpy as np
import pytest

from atcgad import EncoderConfig, Graph, encode, normalized_propagate
from atcgad.encoder import projection_matrices

from .conftest import random_graph
from .oracles import dense_encode, dense_propagate


class TestNormalizedPropagate:
    def test_two_nodes_one_edge(self):
        g = Graph(2, np.array([[0, 1]]), np.zeros((2, 2)))
        h = np.array([[1.0, 0.0], [0.0, 1.0]])
        out = normalized_propagate(g, h)
        # both degrees are 2 with the virtual self-loop, every weight 1/2
        assert np.allclose(out, [[0.5, 0.5], [0.5, 0.5]], atol=0, rtol=0)

    def test_isolated_node_passthrough(self):
        g = Graph(3, np.array([[0, 1]]), np.zeros((3, 2)))
        h = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        out = normalized_propagate(g, h)
        assert np.array_equal(out[2], h[2])

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 10, 4)
        h = rng.standard_normal((10, 4))
        expected = dense_propagate(10, g.edges.tolist(), h)
        assert np.max(np.abs(normalized_propagate(g, h) - expected)) < 1e-12

    def test_linearity(self):
        rng = np.random.default_rng(4)
        g = random_graph(rng, 12, 3)
        h1 = rng.standard_normal((12, 3))
        h2 = rng.standard_normal((12, 3))
        a, b = 2.5, -1.25
        lhs = normalized_propagate(g, a * h1 + b * h2)
        rhs = a * normalized_propagate(g, h1) + b * normalized_propagate(g, h2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_locality_one_hop(self, path5):
        rng = np.random.default_rng(5)
        h = rng.standard_normal((5, 2))
        base = normalized_propagate(path5, h)
        h2 = h.copy()
        h2[4] += 100.0  # far from nodes 0..2
        out = normalized_propagate(path5, h2)
        assert np.array_equal(out[0], base[0])
        assert np.array_equal(out[1], base[1])
        assert not np.array_equal(out[3], base[3])

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(6)
        n = 15
        g = random_graph(rng, n, 3)
        h = rng.standard_normal((n, 3))
        perm = rng.permutation(n)
        g_perm = Graph(n, perm[g.edges], h[np.argsort(perm)][perm])  # features unused here
        out = normalized_propagate(g, h)
        out_perm = normalized_propagate(g_perm, h[np.argsort(perm)])
        # row perm[i] of the relabeled output is row i of the original
        assert np.max(np.abs(out_perm[perm] - out)) < 1e-12

    def test_row_count_checked(self, triangle):
        with pytest.raises(ValueError):
            normalized_propagate(triangle, np.zeros((2, 2)))


class TestEncode:
    def test_zero_layers_identity_when_dims_match(self, triangle):
        cfg = EncoderConfig(latent_dim=2, num_layers=0)
        assert np.array_equal(encode(triangle, cfg), triangle.features)

    def test_zero_layers_projects_otherwise(self, triangle):
        cfg = EncoderConfig(latent_dim=5, num_layers=0, projection_seed=3)
        z = encode(triangle, cfg)
        assert z.shape == (3, 5)
        w = projection_matrices(cfg, 2)[0]
        assert np.array_equal(z, triangle.features @ w)

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        g = random_graph(rng, 20, 6)
        cfg = EncoderConfig(latent_dim=4, num_layers=2, projection_seed=42)
        assert np.array_equal(encode(g, cfg), encode(g, cfg))

    def test_seed_changes_output(self):
        rng = np.random.default_rng(9)
        g = random_graph(rng, 20, 6)
        a = encode(g, EncoderConfig(latent_dim=4, projection_seed=1))
        b = encode(g, EncoderConfig(latent_dim=4, projection_seed=2))
        assert not np.array_equal(a, b)

    def test_two_layer_dense_oracle(self):
        rng = np.random.default_rng(10)
        g = random_graph(rng, 20, 5)
        cfg = EncoderConfig(latent_dim=3, num_layers=2, projection_seed=17)
        weights = projection_matrices(cfg, 5)
        expected = dense_encode(20, g.edges.tolist(), g.features, weights)
        assert np.max(np.abs(encode(g, cfg) - expected)) < 1e-12

    def test_nonlinearity_flag(self):
        rng = np.random.default_rng(11)
        g = random_graph(rng, 15, 4)
        cfg_on = EncoderConfig(latent_dim=4, num_layers=2, projection_seed=5)
        cfg_off = EncoderConfig(latent_dim=4, num_layers=2, projection_seed=5, use_nonlinearity=False)
        weights = projection_matrices(cfg_on, 4)
        assert np.max(np.abs(encode(g, cfg_off) - dense_encode(15, g.edges.tolist(), g.features, weights, use_nonlinearity=False))) < 1e-12
        assert not np.array_equal(encode(g, cfg_on), encode(g, cfg_off))

    def test_glorot_range(self):
        cfg = EncoderConfig(latent_dim=8, num_layers=1, projection_seed=0)
        (w,) = projection_matrices(cfg, 8)
        s = np.sqrt(6.0 / 16)
        assert np.abs(w).max() <= s

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EncoderConfig(latent_dim=0)
        with pytest.raises(ValueError):
            EncoderConfig(latent_dim=2, num_layers=-1)
