import numpy as np
import pytest

from ecglab import autodiff as ad
from ecglab import models, training
from ecglab.autodiff import Tensor
from ecglab.signals import LabeledDataset, Signal, SignalPair
from ecglab.training import (
    DenoiserConfig,
    GanConfig,
    bce_with_logits,
    gradient_penalty,
    mse_loss,
    train_denoiser,
    train_gan,
)


def make_sines(seed=0, n=64, length=128, rate=64.0):
    rng = np.random.default_rng(seed)
    t = np.arange(length) / rate
    out = []
    for _ in range(n):
        w = np.sin(2 * np.pi * rng.uniform(1, 2) * t + rng.uniform(0, 2 * np.pi))
        w += 0.1 * rng.normal(size=length)
        out.append(Signal(w / np.max(np.abs(w)), rate))
    return out


def tiny_gan_cfg(**kw):
    base = dict(batch_size=8, d=2, generator_steps=3, z_len=16, adam_lr=1e-3,
                val_fraction=0.0)
    base.update(kw)
    return GanConfig(**base)


# ---------------------------------------------------------------------------
# gradient penalty


class UnitLinearCritic:
    """C(x) = <w, x> with ||w|| = 1: gradient norm is exactly 1 everywhere."""

    def __init__(self, length):
        w = np.random.default_rng(0).normal(size=(length, 1))
        self.w = Tensor(w / np.linalg.norm(w), requires_grad=True)

    def forward(self, x, mode="train", rng=None):
        n, L, c = x.shape
        return ad.matmul(ad.reshape(x, (n, L * c)), self.w)


def test_gradient_penalty_zero_for_unit_linear_critic():
    critic = UnitLinearCritic(32)
    rng = np.random.default_rng(1)
    real = rng.normal(size=(6, 32, 1))
    fake = rng.normal(size=(6, 32, 1))
    gp = gradient_penalty(critic, real, fake, rng)
    assert abs(gp.item()) < 1e-8


def test_gradient_penalty_positive_for_scaled_critic():
    critic = UnitLinearCritic(32)
    critic.w = Tensor(critic.w.data * 3.0, requires_grad=True)  # 3-Lipschitz
    rng = np.random.default_rng(1)
    real = rng.normal(size=(6, 32, 1))
    fake = rng.normal(size=(6, 32, 1))
    assert abs(gradient_penalty(critic, real, fake, rng).item() - 4.0) < 1e-8


# ---------------------------------------------------------------------------
# adversarial loop bookkeeping


@pytest.fixture(scope="module")
def tiny_gan_run():
    sigs = make_sines(n=32)
    return train_gan(sigs, tiny_gan_cfg(), seed=11)


def test_gan_schedule_five_critic_per_generator(tiny_gan_run):
    _, _, log = tiny_gan_run
    kinds = [r.kind for r in log.rows if r.kind in ("critic", "generator")]
    assert len(kinds) == 3 * 6
    for i in range(3):
        assert kinds[i * 6 : (i + 1) * 6] == ["critic"] * 5 + ["generator"]


def test_gan_gp_term_non_negative(tiny_gan_run):
    _, _, log = tiny_gan_run
    assert all(r.gp_term >= 0 for r in log.of_kind("critic"))


def test_gan_log_steps_monotone(tiny_gan_run):
    _, _, log = tiny_gan_run
    steps = [r.step for r in log.rows]
    assert steps == sorted(steps)


def test_gan_deterministic_rerun():
    sigs = make_sines(n=32)
    g1, c1, log1 = train_gan(sigs, tiny_gan_cfg(), seed=5)
    g2, c2, log2 = train_gan(sigs, tiny_gan_cfg(), seed=5)
    assert log1.to_csv() == log2.to_csv()
    for k in g1.params:
        assert np.array_equal(g1.params[k].data, g2.params[k].data)
    for k in c1.params:
        assert np.array_equal(c1.params[k].data, c2.params[k].data)


def test_gan_insufficient_data():
    with pytest.raises(ValueError):
        train_gan(make_sines(n=4), tiny_gan_cfg(), seed=0)


def test_gan_rejects_mixed_lengths():
    sigs = make_sines(n=8) + [Signal(np.zeros(64), 64.0)]
    with pytest.raises(ValueError):
        train_gan(sigs, tiny_gan_cfg(), seed=0)


# ---------------------------------------------------------------------------
# losses


def test_bce_perfect_prediction_nearly_zero():
    targets = np.array([[1.0, 0.0, 1.0, 0.0, 1.0]])
    logits = Tensor((targets * 2 - 1) * 25.0)
    assert bce_with_logits(logits, targets).item() < 1e-6


def test_bce_matches_direct_formula():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(4, 5))
    targets = rng.integers(0, 2, size=(4, 5)).astype(float)
    got = bce_with_logits(Tensor(logits), targets).item()
    p = 1 / (1 + np.exp(-logits))
    want = -np.mean(targets * np.log(p) + (1 - targets) * np.log(1 - p))
    assert abs(got - want) < 1e-9


def test_mse_loss_value():
    pred = Tensor(np.array([[1.0, 2.0]]))
    assert mse_loss(pred, np.array([[0.0, 0.0]])).item() == 2.5


# ---------------------------------------------------------------------------
# denoiser training variants


def _identity_pairs(n=24, length=96, rate=64.0, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        s = Signal(np.tanh(rng.normal(size=length)), rate)
        out.append(SignalPair(s, s))
    return out


def test_denoiser_pretrained_needs_checkpoint():
    with pytest.raises(ValueError):
        train_denoiser(_identity_pairs(), DenoiserConfig(d=2, epochs=1), "pretrained", seed=0)


def test_denoiser_unknown_variant():
    with pytest.raises(ValueError):
        train_denoiser(_identity_pairs(), DenoiserConfig(d=2, epochs=1), "dropout", seed=0)


def test_denoiser_deterministic():
    pairs = _identity_pairs()
    cfg = DenoiserConfig(d=2, epochs=2, batch_size=8, adam_lr=1e-3)
    n1, log1 = train_denoiser(pairs, cfg, "baseline", seed=4)
    n2, log2 = train_denoiser(pairs, cfg, "baseline", seed=4)
    assert log1.to_csv() == log2.to_csv()
    for k in n1.params:
        assert np.array_equal(n1.params[k].data, n2.params[k].data)


def test_phase_shuffle_zero_matches_baseline_bitwise():
    pairs = _identity_pairs()
    cfg = DenoiserConfig(d=2, epochs=2, batch_size=8, adam_lr=1e-3, phase_shuffle=0)
    base, log_base = train_denoiser(pairs, cfg, "baseline", seed=9)
    shuf, log_shuf = train_denoiser(pairs, cfg, "phase_shuffle", seed=9)
    assert log_base.to_csv() == log_shuf.to_csv()
    for k in base.params:
        assert np.array_equal(base.params[k].data, shuf.params[k].data)


def test_denoiser_best_checkpoint_retained():
    pairs = _identity_pairs(n=30)
    cfg = DenoiserConfig(d=2, epochs=4, batch_size=8, adam_lr=3e-3, val_fraction=0.2)
    net, log = train_denoiser(pairs, cfg, "baseline", seed=2)
    vals = [r.val_loss for r in log.of_kind("validation")]
    rng = np.random.default_rng(2)
    noisy = np.stack([p.noisy.samples for p in pairs])[:, :, None]
    clean = np.stack([p.clean.samples for p in pairs])[:, :, None]
    # recomputed loss of the returned network equals the best logged epoch
    n_val = int(round(cfg.val_fraction * len(pairs)))
    vi = rng.permutation(len(pairs))[:n_val]
    got = training._denoiser_val_loss(net, noisy[vi], clean[vi])
    assert abs(got - min(vals)) < 1e-12
    assert min(vals) <= vals[-1]


def test_pretrained_variant_runs_and_copies_encoder():
    pairs = _identity_pairs()
    critic = models.build("critic", d=2, signal_length=96, seed=3)
    cfg = DenoiserConfig(d=2, epochs=1, batch_size=8)
    net, _ = train_denoiser(pairs, cfg, "pretrained", seed=0, critic_state=critic.state_dict())
    assert net is not None


# ---------------------------------------------------------------------------
# ablation sweep


def test_ablation_sweep_grid_and_determinism():
    real = _identity_pairs(n=14, seed=1)
    synth_pairs = _identity_pairs(n=14, seed=2)
    cfg = DenoiserConfig(d=2, epochs=1, batch_size=4)
    rows = training.ablation_sweep(real, synth_pairs, [2, 4], cfg, seed=3)
    assert len(rows) == 6
    keys = [(r.composition, r.size) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert r.real_report.mse is not None
        assert r.synthetic_report.snr_db is not None
        assert r.real_report.delta_hr_hz is not None
    csv1 = training.sweep_to_csv(rows)
    csv2 = training.sweep_to_csv(training.ablation_sweep(real, synth_pairs, [2, 4], cfg, seed=3))
    assert csv1 == csv2
    assert csv1.splitlines()[0] == training.SWEEP_CSV_HEADER


def test_ablation_sweep_size_exceeds_data():
    real = _identity_pairs(n=6, seed=1)
    synth_pairs = _identity_pairs(n=6, seed=2)
    cfg = DenoiserConfig(d=2, epochs=1, batch_size=4)
    with pytest.raises(ValueError):
        training.ablation_sweep(real, synth_pairs, [100], cfg, seed=0)
