import json
import math

import numpy as np
import pytest
import torch

from synthmarket.gan import (
    DESK_SPEC,
    FULL_SPEC,
    MINI_SPEC,
    GanModel,
    GanTrainingError,
    TcnSpec,
    TrainConfig,
    gan_losses,
    train_gan,
)
from dataclasses import replace


def test_receptive_fields_frozen():
    # 1 + 2 * sum(dilation * (kernel - 1)) over the six blocks
    assert FULL_SPEC.receptive_field == 63
    assert DESK_SPEC.receptive_field == 63
    assert MINI_SPEC.receptive_field == 3
    assert FULL_SPEC.window == 63


def test_spec_json_round_trip():
    spec = TcnSpec(hidden=5, dilations=(1, 2), kernels=(2, 3), noise_channels=2)
    assert spec.receptive_field == 1 + 2 * (1 * 1 + 2 * 2)
    back = TcnSpec.from_json_dict(spec.to_json_dict())
    assert back == spec


def test_initialize_is_seed_deterministic():
    a = GanModel.initialize(MINI_SPEC, seed=5)
    b = GanModel.initialize(MINI_SPEC, seed=5)
    c = GanModel.initialize(MINI_SPEC, seed=6)
    for pa, pb in zip(a.generator.parameters(), b.generator.parameters()):
        assert torch.equal(pa, pb)
    assert any(
        not torch.equal(pa, pc)
        for pa, pc in zip(a.generator.parameters(), c.generator.parameters())
    )


def test_generate_shapes_and_determinism():
    model = GanModel.initialize(MINI_SPEC, seed=1)
    out1 = model.generate(s=10, count=4, seed=42)
    out2 = model.generate(s=10, count=4, seed=42)
    out3 = model.generate(s=10, count=4, seed=43)
    assert out1.shape == (4, 10)
    assert out1.dtype == np.float64
    np.testing.assert_array_equal(out1, out2)
    assert not np.array_equal(out1, out3)


def test_generator_is_causal():
    # output at position t must not move when noise after position t changes
    model = GanModel.initialize(MINI_SPEC, seed=2, dtype=torch.float64)
    rf = MINI_SPEC.receptive_field
    s = 12
    z = torch.randn(1, MINI_SPEC.noise_channels, s + rf - 1, dtype=torch.float64)
    z2 = z.clone()
    cut = 7  # output positions 0..cut-1 depend on z[: cut + rf - 1]
    z2[:, :, cut + rf - 1 :] += 1.0
    model.generator.eval()
    with torch.no_grad():
        a = model.generator(z)[0, 0]
        b = model.generator(z2)[0, 0]
    np.testing.assert_array_equal(a[:cut].numpy(), b[:cut].numpy())
    assert not np.allclose(a[cut:].numpy(), b[cut:].numpy())


def test_discriminator_window_contract():
    model = GanModel.initialize(MINI_SPEC, seed=3)
    probs = model.discriminate(np.zeros((5, MINI_SPEC.window)))
    assert probs.shape == (5,)
    assert np.all((probs > 0) & (probs < 1))
    with pytest.raises(ValueError):
        model.discriminate(np.zeros((5, MINI_SPEC.window + 1)))


def test_gradient_check_mini_spec_float64():
    # autograd vs central differences on the exact training losses
    torch.manual_seed(0)
    model = GanModel.initialize(MINI_SPEC, seed=11, dtype=torch.float64)
    model.generator.train()
    model.discriminator.train()
    w = MINI_SPEC.window
    real = torch.randn(8, 1, w, dtype=torch.float64)
    z = torch.randn(8, MINI_SPEC.noise_channels, 2 * w - 1, dtype=torch.float64)

    d_loss, g_loss = gan_losses(model, real, z)
    d_params = list(model.discriminator.parameters())
    g_params = list(model.generator.parameters())
    d_grads = torch.autograd.grad(d_loss, d_params, retain_graph=True)
    g_grads = torch.autograd.grad(g_loss, g_params)

    rng = np.random.default_rng(0)
    h = 1e-6
    checked = 0
    for params, grads, which in ((d_params, d_grads, 0), (g_params, g_grads, 1)):
        for p, g in zip(params, grads):
            flat = p.data.view(-1)
            for idx in rng.choice(flat.numel(), size=min(3, flat.numel()), replace=False):
                orig = flat[idx].item()
                flat[idx] = orig + h
                up = gan_losses(model, real, z)[which].item()
                flat[idx] = orig - h
                dn = gan_losses(model, real, z)[which].item()
                flat[idx] = orig
                fd = (up - dn) / (2 * h)
                auto = g.view(-1)[idx].item()
                denom = max(abs(fd), abs(auto), 1e-8)
                assert abs(fd - auto) / denom <= 1e-4, (which, fd, auto)
                checked += 1
    assert checked >= 30


def test_train_smoke_and_log():
    rng = np.random.default_rng(1)
    windows = rng.standard_normal((64, MINI_SPEC.window))
    cfg = replace(
        TrainConfig(), iterations=30, batch_size=16, log_every=10,
        lr_generator=1e-4, lr_discriminator=1e-4,
    )
    res = train_gan(windows, MINI_SPEC, cfg, seed=4)
    assert [it for it, _, _ in res.log] == [10, 20, 30]
    assert all(math.isfinite(g) and math.isfinite(d) for _, g, d in res.log)
    assert not res.stopped_early
    # comes back in eval mode so generate() is deterministic
    assert not res.model.generator.training


def test_train_is_seed_deterministic():
    windows = np.random.default_rng(2).standard_normal((40, MINI_SPEC.window))
    cfg = replace(TrainConfig(), iterations=15, batch_size=8)
    a = train_gan(windows, MINI_SPEC, cfg, seed=9).model
    b = train_gan(windows, MINI_SPEC, cfg, seed=9).model
    assert json.dumps(a.to_json_dict()) == json.dumps(b.to_json_dict())


def test_train_rejects_bad_window_length():
    windows = np.zeros((20, MINI_SPEC.window + 2))
    with pytest.raises(ValueError):
        train_gan(windows, MINI_SPEC, TrainConfig(), seed=0)


def test_checkpoint_round_trip_is_exact(tmp_path):
    windows = np.random.default_rng(3).standard_normal((40, MINI_SPEC.window))
    cfg = replace(TrainConfig(), iterations=10, batch_size=8)
    model = train_gan(windows, MINI_SPEC, cfg, seed=12).model
    path = tmp_path / "gan.json"
    model.save(path)
    back = GanModel.load(path)
    for pa, pb in zip(model.generator.parameters(), back.generator.parameters()):
        np.testing.assert_array_equal(
            pa.detach().numpy().astype(np.float64),
            pb.detach().numpy().astype(np.float64),
        )
    np.testing.assert_array_equal(
        model.generate(8, 3, seed=5), back.generate(8, 3, seed=5)
    )
    assert json.load(open(path))["format"] == "tcn-gan/1"


def test_nan_abort_raises_with_log():
    # absurd learning rate blows the weights up within a few steps
    windows = np.random.default_rng(4).standard_normal((40, MINI_SPEC.window)) * 1e6
    cfg = replace(
        TrainConfig(), iterations=500, batch_size=8,
        lr_generator=1e8, lr_discriminator=1e8, log_every=1,
    )
    with pytest.raises(GanTrainingError) as err:
        train_gan(windows, MINI_SPEC, cfg, seed=13)
    assert err.value.log  # snapshot of the loss trace rides along
    assert err.value.iteration >= 1
