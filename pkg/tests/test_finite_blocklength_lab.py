from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import h2, product_xz_chain, two_dispersion_channel
from scipy import special, stats

from jscc_dispersion import dmc_analysis as dmc
from jscc_dispersion import finite_blocklength_lab as lab
from jscc_dispersion import markov_info as mi
from jscc_dispersion import rate_calculator as rc
from jscc_dispersion.errors import DomainError, TooLargeError
from jscc_dispersion.sampling import TrajectorySampler, normal_ks_distance, sample_loglik


def bsc(p):
    return np.array([[1 - p, p], [p, 1 - p]])


def enumerate_achievability(p_m, p_x, w, c):
    """Plain triple loop over (m, x, y)."""
    ny = len(w[0])
    wbar = [sum(p_x[x] * w[x][y] for x in range(len(p_x))) for y in range(ny)]
    total = 0.0
    for m, x, y in itertools.product(range(len(p_m)), range(len(p_x)), range(ny)):
        mass = p_m[m] * p_x[x] * w[x][y]
        if mass <= c * p_x[x] * wbar[y]:
            total += mass
    return total + 1 / c


def proof_converse(p_m, enc, w, q, c):
    """Lower bound on the error of any decoder, built as in the converse proof.

    The correct-decoding mass splits into outputs where P_M(m) W(y|e(m)) > c Q(y),
    whose total is at most sum_m P_M(m) W_{e(m)}{ratio > c}, and the rest, at most
    c sum_m Q(decoding set of m) = c.
    """
    above = 0.0
    for m in range(len(p_m)):
        for y in range(len(q)):
            if p_m[m] * w[enc[m]][y] > c * q[y]:
                above += p_m[m] * w[enc[m]][y]
    return 1.0 - above - c


def random_instance(rng):
    nm, nx, ny = rng.integers(2, 5), rng.integers(2, 4), rng.integers(2, 4)
    return lab.SingleShotInstance(rng.dirichlet(np.ones(nm)), rng.dirichlet(np.ones(ny), size=nx))


class TestSingleShot:
    @pytest.mark.parametrize("p", [(0.5, 0.5), (0.9, 0.1), (0.3, 0.7)])
    def test_noiseless(self, p):
        assert lab.exact_single_shot(lab.SingleShotInstance(np.array(p), np.eye(2))) == 0.0

    def test_skewed_source_ignores_channel(self):
        inst = lab.SingleShotInstance(np.array([0.9, 0.1]), bsc(0.25))
        # 4 encoders x 2 outputs: MAP error for each encoder written out by hand
        table = {
            (0, 0): 1 - (0.9 * 0.75 + 0.9 * 0.25),
            (1, 1): 1 - (0.9 * 0.25 + 0.9 * 0.75),
            (0, 1): 1 - (max(0.9 * 0.75, 0.1 * 0.25) + max(0.9 * 0.25, 0.1 * 0.75)),
            (1, 0): 1 - (max(0.9 * 0.25, 0.1 * 0.75) + max(0.9 * 0.75, 0.1 * 0.25)),
        }
        for enc, err in table.items():
            assert lab.map_error(inst, enc) == pytest.approx(err, abs=1e-15)
        err, enc = lab.exact_single_shot_detail(inst)
        assert err == pytest.approx(0.1, abs=1e-15)
        assert err == pytest.approx(min(table.values()), abs=1e-15)
        assert enc in ((0, 0), (1, 1))

    def test_uniform_source(self):
        inst = lab.SingleShotInstance(np.array([0.5, 0.5]), bsc(0.25))
        assert lab.exact_single_shot(inst) == pytest.approx(0.25, abs=1e-15)

    def test_size_caps(self):
        with pytest.raises(TooLargeError):
            lab.SingleShotInstance(np.full(9, 1 / 9), bsc(0.1))
        with pytest.raises(TooLargeError):
            lab.SingleShotInstance(np.array([0.5, 0.5]), np.full((5, 2), 0.5))
        with pytest.raises(DomainError):
            lab.SingleShotInstance(np.array([0.5, 0.6]), bsc(0.1))


class TestAchievability:
    def test_large_c(self):
        inst = lab.SingleShotInstance(np.array([0.6, 0.4]), bsc(0.2))
        assert lab.achievability_rhs(inst, [0.5, 0.5], 1e12) == 1.0
        assert lab.achievability_rhs(inst, [0.5, 0.5], 1e12, clip=False) == pytest.approx(1.0, abs=1e-11)

    @pytest.mark.parametrize("c", [4.0, 1.0, 0.7])
    def test_enumeration_oracle(self, c):
        inst = lab.SingleShotInstance(np.array([0.9, 0.1]), bsc(0.25))
        raw = lab.achievability_rhs(inst, [0.5, 0.5], c, clip=False)
        assert raw == pytest.approx(enumerate_achievability([0.9, 0.1], [0.5, 0.5], bsc(0.25).tolist(), c), abs=1e-15)

    def test_c4_value(self):
        # with the uniform output every term satisfies P_M W <= 2, so the sum is 1 + 1/4
        inst = lab.SingleShotInstance(np.array([0.9, 0.1]), bsc(0.25))
        assert lab.achievability_rhs(inst, [0.5, 0.5], 4.0, clip=False) == pytest.approx(1.25, abs=1e-15)
        assert lab.achievability_rhs(inst, [0.5, 0.5], 4.0) == 1.0

    def test_bad_c(self):
        inst = lab.SingleShotInstance(np.array([0.5, 0.5]), bsc(0.1))
        with pytest.raises(DomainError):
            lab.achievability_rhs(inst, [0.5, 0.5], 0.0)


class TestConverse:
    @pytest.mark.parametrize("c", [1.0, 2.0, 10.0])
    def test_vacuous_for_large_c(self, c):
        rng = np.random.default_rng(2)
        for _ in range(20):
            inst = random_instance(rng)
            enc = rng.integers(0, inst.w.shape[0], size=inst.messages)
            q = rng.dirichlet(np.ones(inst.w.shape[1]))
            assert lab.converse_rhs(inst, enc, q, c) <= 1e-15  # row masses sum to 1 up to rounding

    def test_eighth_uniform_value(self):
        inst = lab.SingleShotInstance(np.array([0.9, 0.1]), bsc(0.25))
        _, enc = lab.exact_single_shot_detail(inst)
        val = lab.converse_rhs(inst, enc, [0.5, 0.5], 0.125)
        # only message 1 at its unlikely output clears 0.1 * 0.25 <= 0.0625
        assert val == pytest.approx(0.1 * 0.25 - 0.125, abs=1e-15)
        assert val == pytest.approx(proof_converse([0.9, 0.1], enc, bsc(0.25).tolist(), [0.5, 0.5], 0.125), abs=1e-15)

    def test_matches_proof_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            inst = random_instance(rng)
            enc = rng.integers(0, inst.w.shape[0], size=inst.messages)
            q = rng.dirichlet(np.ones(inst.w.shape[1]))
            c = float(rng.uniform(0.01, 0.6))
            assert lab.converse_rhs(inst, enc, q, c) == pytest.approx(
                proof_converse(inst.p_m, enc, inst.w.tolist(), q, c), abs=1e-14
            )

    def test_simplex_grid_below_exact(self):
        rng = np.random.default_rng(6)
        cs = [2.0**-j for j in range(1, 6)]
        grid = [np.array([t, 1 - t]) for t in np.linspace(0, 1, 50)]
        for inst in [lab.SingleShotInstance(np.array([0.9, 0.1]), bsc(0.25))] + [
            lab.SingleShotInstance(rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(2), size=3)) for _ in range(5)
        ]:
            exact, enc = lab.exact_single_shot_detail(inst)
            for q in grid:
                for c in cs:
                    assert lab.converse_rhs(inst, enc, q, c) <= exact + 1e-15

    def test_bad_encoder(self):
        inst = lab.SingleShotInstance(np.array([0.5, 0.5]), bsc(0.1))
        with pytest.raises(DomainError):
            lab.converse_rhs(inst, [0, 2], [0.5, 0.5], 0.5)


def test_sandwich_random_instances():
    rng = np.random.default_rng(10)
    for _ in range(25):
        inst = random_instance(rng)
        exact, enc = lab.exact_single_shot_detail(inst)
        p_x = rng.dirichlet(np.ones(inst.w.shape[0]))
        q = p_x @ inst.w
        for c_ach, c_conv in ((2.0, 0.5), (8.0, 1 / 8), (32.0, 1 / 32)):
            sw = lab.BoundSandwich(
                achievability_rhs=lab.achievability_rhs(inst, p_x, c_ach),
                converse_rhs=lab.converse_rhs(inst, enc, q, c_conv),
                exact=exact,
                k=1,
                n=1,
                c=c_ach,
            )
            assert sw.holds()


class TestSeparation:
    def test_lossless_source_code(self):
        w2 = lab.product_channel(bsc(0.2), 2)
        chk = lab.separation_product_check([0.5, 0.3, 0.2], [0, 1, 2], [0, 1, 2], w2, [0, 1, 3], [0, 1, 1, 2])
        assert chk.source_error == 0.0
        assert chk.averaged == pytest.approx(chk.channel_error, abs=1e-15)

    def test_noiseless_channel(self):
        chk = lab.separation_product_check([0.5, 0.3, 0.2], [0, 1, 1], [0, 1], np.eye(2), [0, 1], [0, 1])
        assert chk.channel_error == 0.0
        assert chk.averaged == pytest.approx(0.2, abs=1e-15)
        assert chk.averaged == pytest.approx(chk.source_error, abs=1e-15)

    def test_truncation_and_repetition(self):
        # source code keeps the two likeliest messages, repetition code over two BSC(0.2) uses
        w2 = lab.product_channel(bsc(0.2), 2)
        chk = lab.separation_product_check([0.5, 0.3, 0.2], [0, 1, 1], [0, 1, 2], w2, [0, 3, 1], [0, 1, 1, 1])
        assert chk.source_error == pytest.approx(0.2)
        assert abs(chk.averaged - chk.predicted) < 1e-12
        p_s, p_c = chk.source_error, chk.channel_error
        assert chk.predicted == pytest.approx(p_s + p_c - p_s * p_c, abs=1e-15)

    def test_product_channel(self):
        w2 = lab.product_channel(bsc(0.2), 2)
        assert w2.shape == (4, 4)
        assert w2[0, 3] == pytest.approx(0.04)
        assert w2[1, 1] == pytest.approx(0.64)
        np.testing.assert_allclose(w2.sum(axis=1), 1.0)

    def test_too_large(self):
        with pytest.raises(TooLargeError):
            lab.separation_product_check([0.5, 0.5], [0, 1], [0, 1, 0, 0, 0], np.eye(2), [0, 1, 0, 1, 0], [0, 1])

    def test_mismatched_maps(self):
        with pytest.raises(DomainError):
            lab.separation_product_check([0.5, 0.5], [0, 1], [0, 1], np.eye(2), [0, 1], [0, 1, 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_separation_identity_property(seed):
    rng = np.random.default_rng(seed)
    nm, A, nx, ny = rng.integers(2, 7), rng.integers(1, 5), rng.integers(2, 4), rng.integers(2, 4)
    chk = lab.separation_product_check(
        rng.dirichlet(np.ones(nm)),
        rng.integers(0, A, nm),
        rng.integers(0, nm, A),
        rng.dirichlet(np.ones(ny), size=nx),
        rng.integers(0, nx, A),
        rng.integers(0, A, ny),
    )
    assert abs(chk.averaged - chk.predicted) < 1e-12


class TestSampler:
    def test_deterministic(self):
        chain = mi.binary_symmetric_chain(0.11)
        a = sample_loglik(TrajectorySampler(chain, seed=5), [10, 50], 5000)
        b = sample_loglik(TrajectorySampler(chain, seed=5), [10, 50], 5000)
        np.testing.assert_array_equal(a, b)
        c = sample_loglik(TrajectorySampler(chain, seed=6), [10, 50], 5000)
        assert not np.array_equal(a, c)

    def test_worker_count_irrelevant(self):
        chain = product_xz_chain()[0]
        s = TrajectorySampler(chain, seed=11)
        np.testing.assert_array_equal(sample_loglik(s, [40], 9000, workers=1), sample_loglik(s, [40], 9000, workers=3))

    def test_streams_differ(self):
        chain = mi.iid_chain([0.89, 0.11])
        a = sample_loglik(TrajectorySampler(chain, seed=1, stream=0), [100], 100)
        b = sample_loglik(TrajectorySampler(chain, seed=1, stream=1), [100], 100)
        assert not np.array_equal(a, b)

    def test_uniform_iid_all_zero(self):
        vals = lab.sample_info_density(mi.iid_chain([0.5, 0.5]), 256, 3000, seed=0)
        assert np.all(np.abs(vals) < 1e-12)

    def test_iid_fast_path_matches_stepping(self):
        # the same chain with a stationary start but a perturbed initial vector forces the stepping path
        chain = mi.iid_chain([0.7, 0.3])
        fast = sample_loglik(TrajectorySampler(chain, seed=3), [64], 40_000)[:, 0]
        slow = sample_loglik(TrajectorySampler(chain, seed=3, initial=np.array([0.7 - 1e-9, 0.3 + 1e-9])), [64], 40_000)[:, 0]
        assert abs(fast.mean() - slow.mean()) < 0.05
        assert abs(fast.var() / slow.var() - 1) < 0.05

    @pytest.mark.parametrize(
        "make",
        [lambda: mi.iid_chain([0.89, 0.11]), lambda: mi.binary_symmetric_chain(0.11), lambda: product_xz_chain()[0]],
        ids=["iid", "symmetric", "product_xz"],
    )
    def test_mean_and_variance(self, make):
        chain = make()
        rates = mi.info_rates(chain)
        n = 1000
        ll = sample_loglik(TrajectorySampler(chain, seed=21), [n], 20_000, workers=2)[:, 0]
        assert abs(ll.mean() / (n * rates.entropy) - 1) < 0.03
        assert abs(ll.var() / (n * rates.varentropy) - 1) < 0.03

    def test_checkpoints(self):
        chain = mi.binary_symmetric_chain(0.2)
        out = sample_loglik(TrajectorySampler(chain, seed=2), [0, 1, 5, 5, 20], 100)
        assert out.shape == (100, 5)
        np.testing.assert_array_equal(out[:, 0], 0.0)
        np.testing.assert_array_equal(out[:, 2], out[:, 3])
        assert np.all(np.diff(out, axis=1) >= 0)
        with pytest.raises(DomainError):
            sample_loglik(TrajectorySampler(chain, seed=2), [5, 3], 10)

    def test_bad_initial(self):
        with pytest.raises(DomainError):
            TrajectorySampler(mi.binary_symmetric_chain(0.2), seed=0, initial=np.array([1.0]))

    def test_ks_small_n(self):
        vals = lab.sample_info_density(mi.binary_symmetric_chain(0.11), 1024, 20_000, seed=9)
        assert normal_ks_distance(vals, mi.varentropy_rate(mi.binary_symmetric_chain(0.11))) < 0.05


class TestCaBoundPair:
    def test_noiseless_step(self):
        src = mi.iid_chain([0.5, 0.5])
        noise = mi.iid_chain([1 - 1e-12, 1e-12])
        n = 256
        pen = math.exp(-(n**0.25))
        low = lab.ca_bound_pair(src, noise, 240, n, 2000, seed=1)
        high = lab.ca_bound_pair(src, noise, 270, n, 2000, seed=1)
        assert low.achievability_rhs == pytest.approx(pen, abs=1e-12)
        assert low.converse_rhs == pytest.approx(-pen, abs=1e-12)
        assert high.achievability_rhs == pytest.approx(1 + pen, abs=1e-12)
        assert high.converse_rhs == pytest.approx(1 - pen, abs=1e-12)
        assert low.central == 0.0 and high.central == 1.0

    def test_exact_binomial_oracle(self):
        # both flips have the same lattice, so T = (k + n)(-log .89) + B log(.89/.11) with B ~ Bin(k + n, .11)
        p = 0.11
        n = 1024
        k = lab.message_length(mi.entropy_rate(mi.iid_chain([1 - p, p])), math.log(2) - h2(p), n, 0.3)
        res = lab.ca_bound_pair(mi.iid_chain([1 - p, p]), mi.iid_chain([1 - p, p]), k, n, 40_000, seed=3, workers=2)
        a, step = -math.log(1 - p), math.log((1 - p) / p)

        def tail(level):
            b_min = math.ceil((level - (k + n) * a) / step - 1e-12)
            return float(stats.binom.sf(b_min - 1, k + n, p))

        level, shift = n * math.log(2), n**0.25
        pen = math.exp(-shift)
        assert abs(res.central - tail(level)) < 4 * res.half_width
        assert abs(res.achievability_rhs - (tail(level - shift) + pen)) < 4 * res.half_width
        assert abs(res.converse_rhs - (tail(level + shift) - pen)) < 4 * res.half_width

    def test_shifted_gaussian_and_shrinking_gap(self):
        src, noise = mi.iid_chain([0.89, 0.11]), mi.iid_chain([0.89, 0.11])
        p = rc.RateProblem(rc.SourceSummary.from_chain(src), rc.ChannelSummary.from_conditional_additive(noise))
        var = p.source_term + p.channel.V_c
        gaps = []
        for n in (256, 4096):
            k = lab.message_length(p.source.H, p.channel.C, n, 0.0)
            res = lab.ca_bound_pair(src, noise, k, n, 20_000, seed=8)
            d = n**-0.25
            assert abs(res.achievability_rhs - special.ndtr(d / math.sqrt(var))) < 0.05
            assert abs(res.converse_rhs - special.ndtr(-d / math.sqrt(var))) < 0.05
            gaps.append(res.achievability_rhs - res.converse_rhs)
        assert gaps[1] < gaps[0]

    def test_domain(self):
        with pytest.raises(DomainError):
            lab.ca_bound_pair(mi.iid_chain([0.5, 0.5]), mi.iid_chain([0.5, 0.5]), 0, 10, 10, seed=0)


class TestTwoRegime:
    def test_single_dispersion_channel_matches_gaussian(self):
        src = mi.iid_chain([0.89, 0.11])
        w = bsc(0.11)
        p = rc.RateProblem(rc.SourceSummary.from_chain(src), rc.ChannelSummary.from_dmc(w))
        R = [-1.0, 0.0, 0.8]
        res = lab.two_regime_curve(src, w, R, n=1024, samples=40_000, seed=4)
        var = p.source_term + p.channel.v_plus
        for r, est in zip(R, res.estimate):
            assert abs(est - special.ndtr(r / math.sqrt(var))) < 0.02

    def test_far_left_vanishes(self):
        est = lab.two_regime_estimate(mi.iid_chain([0.89, 0.11]), bsc(0.11), -8.0, n=1024, samples=20_000, seed=1)
        assert est == 0.0

    def test_monotone_with_shared_randomness(self):
        R = np.linspace(-2, 2, 17)
        res = lab.two_regime_curve(mi.binary_symmetric_chain(0.11), two_dispersion_channel(), R, n=512, samples=20_000, seed=2)
        assert np.all(np.diff(res.estimate) >= 0)
        assert np.all(np.diff(res.plus_fraction) >= 0)

    def test_reproducible(self):
        args = (mi.iid_chain([0.89, 0.11]), bsc(0.11), [0.0, 0.5])
        a = lab.two_regime_curve(*args, n=256, samples=9000, seed=3, workers=1)
        b = lab.two_regime_curve(*args, n=256, samples=9000, seed=3, workers=2)
        np.testing.assert_array_equal(a.estimate, b.estimate)

    def test_message_length(self):
        assert lab.message_length(0.5, 0.25, 100, 0.0) == 50
        assert lab.message_length(0.5, 0.25, 100, 1.0) == 70
        assert lab.message_length(1.0, 0.1, 4, -10.0) == 1


def test_capacity_used_by_two_regime_is_saddle():
    w = bsc(0.3)
    cap = dmc.capacity(w)
    np.testing.assert_allclose(cap.saddle_output, [0.5, 0.5], atol=1e-12)
