from fractions import Fraction

import numpy as np
import pytest

from jengan.delta_sampling import (DeltaRng, SamplingMethod, sample_schedule,
                                   zero_schedule)
from jengan.nn import Tensor
from jengan.nn import functional as F
from jengan.sinc_filters import Signal, apply_filter, make_sinc_kernel
from jengan.wrapping import (WRAP_STATS, DiscriminatorPairResult,
                             InvalidRatioError, WrappableBlock, assign_shift,
                             discriminator_pair_forward,
                             generator_forward_jengan, wrap_block)

from oracles import central_difference, relative_error


def band_limited(n=1024, top=0.4, seed=0):
    rng = np.random.Generator(np.random.Philox(seed))
    m = np.arange(n)
    x = np.zeros(n)
    for k in range(1, int(top * n / 2)):
        if rng.random() < 0.06:
            x += rng.normal() * np.cos(2 * np.pi * k * m / n + rng.random() * 6)
    return Signal(x / np.max(np.abs(x)))


def fft_upsample_2x(sig: Signal) -> Signal:
    """Exact band-limited x2 interpolation for periodic content."""
    x = sig.data
    n = x.shape[1]
    spec = np.fft.rfft(x, axis=1)
    up = np.zeros((x.shape[0], n + 1), dtype=complex)
    up[:, :spec.shape[1]] = spec
    y = np.fft.irfft(up, 2 * n, axis=1) * 2.0
    return Signal(y, sample_rate=sig.sample_rate * 2)


class TestAssignShift:
    def test_upsampling_puts_value_on_output(self):
        a = assign_shift(2.0, 2)
        assert a.side == "output"
        assert a.output_shift == 2.0 and a.input_shift == 1.0

    def test_rate_preserving_copies_both_sides(self):
        a = assign_shift(-1.5, 1)
        assert a.input_shift == -1.5 and a.output_shift == -1.5

    def test_downsampling_puts_value_on_input(self):
        a = assign_shift(2.0, Fraction(1, 4))
        assert a.side == "input"
        assert a.input_shift == 2.0 and a.output_shift == 0.5

    def test_downsample_output_shift_oracle(self):
        # shifting a delayed impulse through an ideal decimator: a delay of
        # d input samples is d*r output samples
        r = 0.25
        a = assign_shift(2.0, r)
        assert a.output_shift == pytest.approx(a.input_shift * r)

    def test_invalid_ratio(self):
        with pytest.raises(InvalidRatioError):
            assign_shift(1.0, 0)
        with pytest.raises(InvalidRatioError):
            assign_shift(1.0, -2)

    def test_out_of_bound_value(self):
        with pytest.raises(ValueError):
            assign_shift(2.5, 1)

    def test_bounded_shift_rule(self):
        rng = np.random.Generator(np.random.Philox(1))
        for r in (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
            for _ in range(200):
                v = float(rng.uniform(-2, 2))
                a = assign_shift(v, r)
                assert max(abs(a.input_shift), abs(a.output_shift)) == pytest.approx(abs(v))
                assert abs(a.input_shift) <= 2.0 + 1e-12
                assert abs(a.output_shift) <= 2.0 + 1e-12


class TestWrapBlock:
    def test_zero_shift_is_bit_transparent_signal(self):
        block = WrappableBlock(forward=lambda s: s, resample_ratio=1)
        x = band_limited(seed=3)
        out = wrap_block(block, assign_shift(0.0, 1), x)
        assert np.array_equal(out.data, x.data)

    def test_zero_shift_is_bit_transparent_tensor(self):
        rng = np.random.Generator(np.random.Philox(4))
        block = WrappableBlock(forward=lambda t: F.affine(t, 2.0, 0.0),
                               resample_ratio=1)
        x = Tensor(rng.standard_normal((1, 2, 64)))
        out = wrap_block(block, assign_shift(0.0, 1), x)
        assert np.array_equal(out.data, 2.0 * x.data)

    def test_identity_block_fractional_shift_recovers_input(self):
        # explicit double-convolution oracle: the wrap must equal it exactly,
        # and the interior must come back within the kernel's ripple budget
        block = WrappableBlock(forward=lambda s: s, resample_ratio=1)
        x = band_limited(seed=5)
        a = assign_shift(0.5, 1)
        wrapped = wrap_block(block, a, x)
        oracle = apply_filter(apply_filter(x, make_sinc_kernel(-0.5)),
                              make_sinc_kernel(+0.5))
        assert np.array_equal(wrapped.data, oracle.data)
        err = np.abs(wrapped.data - x.data)[:, 40:-40].max()
        assert err < 0.06

    def test_lti_block_output_insensitive_to_sampled_value(self):
        # a shift-equivariant band-limited block makes the wrapper a near
        # no-op for any sampled value (kernel ripple floor applies)
        x = band_limited(n=512, top=0.3, seed=6)
        block = WrappableBlock(forward=fft_upsample_2x, resample_ratio=2)
        base = wrap_block(block, assign_shift(0.0, 2), x)
        for v in (0.5, 1.0, 2.0, -1.5):
            out = wrap_block(block, assign_shift(v, 2), x)
            err = np.abs(out.data - base.data)[:, 60:-60].max()
            peak = np.abs(base.data).max()
            assert err < 0.08 * peak, (v, err, peak)

    def test_shift_outside_kernel_support_rejected(self):
        from jengan.sinc_filters import InvalidShiftError
        from jengan.wrapping import ShiftAssignment
        block = WrappableBlock(forward=lambda s: s, resample_ratio=1)
        bad = ShiftAssignment(input_shift=15.0, output_shift=15.0,
                              sampled_value=15.0, side="output")
        with pytest.raises(InvalidShiftError):
            wrap_block(block, bad, band_limited(seed=7))

    def test_gradient_flows_through_wrap(self):
        rng = np.random.Generator(np.random.Philox(8))
        w = Tensor(rng.standard_normal((2, 2, 3)), requires_grad=True)
        x = Tensor(rng.standard_normal((1, 2, 32)), requires_grad=True)
        block = WrappableBlock(
            forward=lambda t: F.conv1d(t, w, None, stride=1, padding=1),
            resample_ratio=1)

        def loss():
            out = wrap_block(block, assign_shift(0.75, 1), x)
            return F.mean(F.square(out))

        out = loss()
        out.backward()
        for tensor in (w, x):
            idx = rng.choice(tensor.data.size, size=4, replace=False)
            fd = central_difference(lambda: loss().item(), tensor.data, idx)
            an = tensor.grad.reshape(-1)[idx]
            for f_val, a_val in zip(fd, an):
                assert relative_error(f_val, a_val) < 1e-4


class TestGeneratorForward:
    def test_zero_schedule_equals_plain_composition(self):
        rng = np.random.Generator(np.random.Philox(9))
        w = Tensor(rng.standard_normal((2, 2, 3)))
        blocks = [
            WrappableBlock(forward=lambda t: F.leaky_relu(t, 0.1), resample_ratio=1),
            WrappableBlock(forward=lambda t: F.conv1d(t, w, None, padding=1),
                           resample_ratio=1),
            WrappableBlock(forward=lambda t: F.tanh(t), resample_ratio=1),
        ]
        x = Tensor(rng.standard_normal((1, 2, 48)))
        wrapped = generator_forward_jengan(blocks, zero_schedule(3), x)
        plain = x
        for b in blocks:
            plain = b.forward(plain)
        assert np.array_equal(wrapped.data, plain.data)

    def test_single_identity_block(self):
        blocks = [WrappableBlock(forward=lambda s: s, resample_ratio=1)]
        x = band_limited(seed=10)
        out = generator_forward_jengan(blocks, zero_schedule(1), x)
        assert np.array_equal(out.data, x.data)

    def test_schedule_length_mismatch(self):
        blocks = [WrappableBlock(forward=lambda s: s, resample_ratio=1)] * 2
        with pytest.raises(ValueError):
            generator_forward_jengan(blocks, zero_schedule(3), band_limited())

    def test_deterministic_given_seed(self):
        blocks = [WrappableBlock(forward=lambda s: s, resample_ratio=1)] * 2
        x = band_limited(seed=11)
        method = SamplingMethod("uniform")
        out1 = generator_forward_jengan(
            blocks, sample_schedule(method, 2, DeltaRng(42)), x)
        out2 = generator_forward_jengan(
            blocks, sample_schedule(method, 2, DeltaRng(42)), x)
        assert np.array_equal(out1.data, out2.data)


def _toy_disc_blocks(seed=12):
    rng = np.random.Generator(np.random.Philox(seed))
    w1 = Tensor(rng.standard_normal((2, 1, 4)) * 0.5)
    w2 = Tensor(rng.standard_normal((3, 2, 4)) * 0.5)

    return [
        WrappableBlock(forward=lambda t: F.conv1d(t, w1, None, stride=2, padding=1),
                       resample_ratio=Fraction(1, 2)),
        WrappableBlock(forward=lambda t: F.conv1d(t, w2, None, stride=2, padding=1),
                       resample_ratio=Fraction(1, 2)),
    ]


class TestDiscriminatorPair:
    def test_sync_uses_identical_deltas(self):
        blocks = _toy_disc_blocks()
        rng = np.random.Generator(np.random.Philox(13))
        real = Tensor(rng.standard_normal((1, 1, 64)))
        fake = Tensor(rng.standard_normal((1, 1, 64)))
        sched = sample_schedule(SamplingMethod("discrete"), 2, DeltaRng(3))
        res = discriminator_pair_forward(blocks, sched, real, fake, sync=True)
        assert res.real_deltas == res.fake_deltas

    def test_zero_schedule_matches_unwrapped(self):
        blocks = _toy_disc_blocks()
        rng = np.random.Generator(np.random.Philox(14))
        real = Tensor(rng.standard_normal((1, 1, 64)))
        fake = Tensor(rng.standard_normal((1, 1, 64)))
        res = discriminator_pair_forward(blocks, zero_schedule(2), real, fake)
        h = real
        for b in blocks:
            h = b.forward(h)
        assert np.array_equal(res.real_score.data, h.data)
        assert np.array_equal(res.real_features[-1].data, h.data)

    def test_async_needs_fake_schedule(self):
        blocks = _toy_disc_blocks()
        x = Tensor(np.zeros((1, 1, 64)))
        with pytest.raises(ValueError):
            discriminator_pair_forward(blocks, zero_schedule(2), x, x, sync=False)

    def test_async_schedules_differ_across_seeds(self):
        # chance of an all-equal pair per seed is (1/5)^4 with four blocks
        # of discrete draws; over 100 seeds at least 99 must differ
        rng_w = np.random.Generator(np.random.Philox(18))
        chans = [1, 2, 3, 2, 3]
        weights = [Tensor(rng_w.standard_normal((chans[i + 1], chans[i], 4)) * 0.5)
                   for i in range(4)]
        blocks = [
            WrappableBlock(
                forward=(lambda w: lambda t: F.conv1d(t, w, None, stride=2, padding=1))(w),
                resample_ratio=Fraction(1, 2))
            for w in weights
        ]
        rng = np.random.Generator(np.random.Philox(15))
        real = Tensor(rng.standard_normal((1, 1, 64)))
        fake = Tensor(rng.standard_normal((1, 1, 64)))
        method = SamplingMethod("discrete")
        differing = 0
        for seed in range(100):
            delta_rng = DeltaRng(seed)
            sched = sample_schedule(method, 4, delta_rng)
            fake_sched = sample_schedule(method, 4, delta_rng)
            res = discriminator_pair_forward(blocks, sched, real, fake,
                                             sync=False, fake_schedule=fake_sched)
            if res.real_deltas != res.fake_deltas:
                differing += 1
        assert differing >= 99

    def test_shape_mismatch_rejected(self):
        blocks = _toy_disc_blocks()
        with pytest.raises(ValueError):
            discriminator_pair_forward(blocks, zero_schedule(2),
                                       Tensor(np.zeros((1, 1, 64))),
                                       Tensor(np.zeros((1, 1, 32))))

    def test_feature_tap_pre_differs_after_fractional_shift(self):
        blocks = _toy_disc_blocks()
        rng = np.random.Generator(np.random.Philox(16))
        real = Tensor(rng.standard_normal((1, 1, 64)))
        fake = Tensor(rng.standard_normal((1, 1, 64)))
        sched = sample_schedule(SamplingMethod("uniform"), 2, DeltaRng(4))
        post = discriminator_pair_forward(blocks, sched, real, fake,
                                          feature_tap="post")
        pre = discriminator_pair_forward(blocks, sched, real, fake,
                                         feature_tap="pre")
        assert not np.array_equal(post.real_features[0].data,
                                  pre.real_features[0].data)
        with pytest.raises(ValueError):
            discriminator_pair_forward(blocks, sched, real, fake,
                                       feature_tap="mid")


class TestWrapStats:
    def test_counter_tracks_wrapped_calls_only(self):
        blocks = _toy_disc_blocks()
        rng = np.random.Generator(np.random.Philox(17))
        x = Tensor(rng.standard_normal((1, 1, 64)))
        WRAP_STATS.reset()
        h = x
        for b in blocks:
            h = b.forward(h)
        assert WRAP_STATS.calls == 0
        discriminator_pair_forward(blocks, zero_schedule(2), x, x)
        assert WRAP_STATS.calls == 4  # two blocks, real and fake paths
