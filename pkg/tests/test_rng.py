import numba as nb
import numpy as np
from scipy import stats

from boht._rng import next_index, next_index_pair, stream_state, uniforms


@nb.njit
def _indices(seed, n, draws):
    st = stream_state(seed, 9, 0, 0)
    out = np.empty(draws, dtype=np.int64)
    for k in range(0, draws, 2):
        st, out[k], out[k + 1] = next_index_pair(st, n)
    return out


@nb.njit
def _single_indices(seed, n, draws):
    st = stream_state(seed, 9, 1, 0)
    out = np.empty(draws, dtype=np.int64)
    for k in range(draws):
        st, out[k] = next_index(st, n)
    return out


class TestStreams:
    def test_deterministic(self):
        np.testing.assert_array_equal(uniforms(1, 2, 3, 4, 100), uniforms(1, 2, 3, 4, 100))

    def test_keys_separate_streams(self):
        base = uniforms(1, 2, 3, 4, 50)
        for key in [(0, 2, 3, 4), (1, 0, 3, 4), (1, 2, 0, 4), (1, 2, 3, 0)]:
            assert not np.array_equal(base, uniforms(*key, 50))

    def test_uniform_ks(self):
        u = uniforms(7, 1, 1, 1, 10**5)
        assert np.all((u >= 0) & (u < 1))
        assert stats.kstest(u, "uniform").pvalue > 1e-3

    def test_adjacent_indices_uncorrelated(self):
        # the first draw of consecutive streams must not be correlated
        first = np.array([uniforms(3, 1, 1, i, 1)[0] for i in range(20000)])
        assert abs(np.corrcoef(first[:-1], first[1:])[0, 1]) < 4 / np.sqrt(first.size)
        assert stats.kstest(first, "uniform").pvalue > 1e-3

    def test_index_pair_uniform(self):
        n = 13
        counts = np.bincount(_indices(5, n, 2 * 10**5), minlength=n)
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_index_pair_halves_independent(self):
        x = _indices(6, 4, 2 * 10**5).reshape(-1, 2)
        table = np.zeros((4, 4))
        np.add.at(table, (x[:, 0], x[:, 1]), 1)
        assert stats.chi2_contingency(table)[1] > 1e-3

    def test_single_index(self):
        counts = np.bincount(_single_indices(8, 7, 10**5), minlength=7)
        assert counts.size == 7
        assert stats.chisquare(counts).pvalue > 1e-3
