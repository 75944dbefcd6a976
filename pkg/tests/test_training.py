import numpy as np
import pytest

from ekgc import decoder, entail, training
from ekgc.config import TrainConfig
from ekgc.errors import FormatError, ValidationError
from ekgc.losses import LossConfig, TrainQueries
from ekgc.toydata import clustered_toy
from ekgc.training import AdamState, adam_step, adam_update


def scalar_adam_oracle(grads, lr, b1=0.9, b2=0.999, eps=1e-8, theta0=0.0):
    """Independent step-by-step Adam on one scalar."""
    m = v = 0.0
    theta = theta0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return theta


def toy_setup(seed=0, loss=None, **cfg_kwargs):
    g, emb = clustered_toy(
        num_clusters=3, heads_per_cluster=4, tails_per_cluster=2,
        num_relations=3, relations_per_cluster=1, dim=8, seed=5,
    )
    index = entail.build_index(emb, k_max=6)
    cfg = TrainConfig(
        lr=0.01, batch_size=4, epochs=3, seed=seed, dim=8, kernels=2,
        kernel_width=3, loss=loss or LossConfig(), **cfg_kwargs,
    )
    params = decoder.init_params(
        g.num_nodes, g.num_relations, cfg.dim, cfg.kernels, cfg.kernel_width,
        seed=cfg.seed, entity_init=emb,
    )
    return g, emb, index, cfg, params


def test_adam_zero_gradient_is_fixed_point():
    g, _, index, cfg, params = toy_setup()
    state = AdamState.fresh(params)
    before = params.copy()
    adam_step(params, decoder.zero_gradients(params), state, cfg)
    for name in ("entity", "relation", "kernels", "projection"):
        assert np.array_equal(getattr(params, name), getattr(before, name))
    assert state.t["kernels"] == 1


def test_adam_first_step_closed_form():
    theta = np.array([0.0])
    m = np.zeros(1)
    v = np.zeros(1)
    lr = 0.05
    out = adam_update(theta, np.array([1.0]), m, v, t=1, lr=lr)
    # bias correction makes m_hat = v_hat = g at t=1
    assert out[0] == pytest.approx(-lr, rel=1e-6)


def test_adam_quadratic_descent_matches_scalar_oracle():
    theta = np.array([1.0])
    m = np.zeros(1)
    v = np.zeros(1)
    seen = [1.0]
    grads = []
    for t in range(1, 11):
        g = 2.0 * theta[0]
        grads.append(g)
        theta = adam_update(theta, np.array([g]), m, v, t=t, lr=0.1)
        seen.append(abs(theta[0]))
    assert all(b < a for a, b in zip(seen, seen[1:]))
    assert theta[0] == pytest.approx(scalar_adam_oracle(grads, lr=0.1, theta0=1.0), abs=1e-12)


def test_adam_shape_mismatch_rejected():
    with pytest.raises(ValidationError):
        adam_update(np.zeros(3), np.zeros(4), np.zeros(3), np.zeros(3), t=1, lr=0.1)


def test_epoch_is_deterministic():
    loss = LossConfig(gamma1=1.0, gamma2=1.0, k1=3, k2=3)
    outs = []
    for _ in range(2):
        g, _, index, cfg, params = toy_setup(loss=loss)
        state = AdamState.fresh(params)
        metrics = training.train_epoch(g, params, index, cfg, state, epoch=0)
        outs.append((metrics, params))
    assert outs[0][0] == outs[1][0]
    for name in ("entity", "relation", "kernels", "projection"):
        assert np.array_equal(getattr(outs[0][1], name), getattr(outs[1][1], name))


def test_loss_decreases_without_entailment():
    g, _, _, cfg, params = toy_setup()
    state = AdamState.fresh(params)
    history = [
        training.train_epoch(g, params, None, cfg, state, epoch)["l1"]
        for epoch in range(5)
    ]
    assert history[-1] < history[0]
    assert all(b <= a * 1.001 for a, b in zip(history, history[1:]))


def test_gamma2_zero_reports_no_contrast_steps():
    g, _, index, cfg, params = toy_setup(loss=LossConfig(gamma1=0.5, k1=2))
    state = AdamState.fresh(params)
    metrics = training.train_epoch(g, params, index, cfg, state, epoch=0)
    assert metrics["lc"] == 0.0
    # entity steps count equals the triplet steps: no extra contrast steps ran
    assert state.t["entity"] == state.t["kernels"]


def test_baseline_reduction_is_bitwise():
    g, _, index, cfg, params = toy_setup()
    params2 = params.copy()
    s1, s2 = AdamState.fresh(params), AdamState.fresh(params2)
    m1 = training.train_epoch(g, params, index, cfg, s1, epoch=0)
    m2 = training.baseline_epoch(g, params2, cfg, s2, epoch=0)
    assert m1["l1"] == m2["l1"]
    for name in ("entity", "relation", "kernels", "projection"):
        assert np.array_equal(getattr(params, name), getattr(params2, name))


def test_contrast_steps_touch_only_entity_rows():
    loss = LossConfig(gamma2=1.0, k2=3)
    g, _, index, cfg, params = toy_setup(loss=loss)
    queries = TrainQueries(g)
    state = AdamState.fresh(params)
    rels_before = params.relation.copy()
    kern_before = params.kernels.copy()
    proj_before = params.projection.copy()
    entity_before = params.entity.copy()
    # run a single contrast-only pass by stripping the triplet objective
    from ekgc import losses as losses_mod

    rng = np.random.default_rng(0)
    lc, grad_entity, _ = losses_mod.entity_contrast(
        params.entity, [h for h, _ in queries.groups[:4]], index, 3, 0.07, rng
    )
    cgrads = decoder.zero_gradients(params)
    cgrads.entity += grad_entity
    adam_step(params, cgrads, state, cfg, tensors=("entity",))
    assert np.array_equal(params.relation, rels_before)
    assert np.array_equal(params.kernels, kern_before)
    assert np.array_equal(params.projection, proj_before)
    assert not np.array_equal(params.entity, entity_before)


def test_batch_order_is_pure_function_of_seed_and_epoch():
    rng_a, _ = training._epoch_rngs(7, 3)
    rng_b, _ = training._epoch_rngs(7, 3)
    rng_c, _ = training._epoch_rngs(7, 4)
    a = rng_a.permutation(50)
    assert np.array_equal(a, rng_b.permutation(50))
    assert not np.array_equal(a, rng_c.permutation(50))


def test_checkpoint_round_trip(tmp_path):
    g, _, index, cfg, params = toy_setup()
    state = AdamState.fresh(params)
    training.train_epoch(g, params, index, cfg, state, epoch=0)
    path = str(tmp_path / "c.ckpt")
    training.save_checkpoint(path, params, state, epoch=1, seed=cfg.seed)
    params2, state2, epoch, seed = training.load_checkpoint(path)
    assert epoch == 1 and seed == cfg.seed
    for name in ("entity", "relation", "kernels", "projection"):
        assert np.array_equal(getattr(params, name), getattr(params2, name))
        assert np.array_equal(state.m[name], state2.m[name])
        assert np.array_equal(state.v[name], state2.v[name])
    assert state.t == state2.t


def test_checkpoint_mismatched_entity_count_rejected(tmp_path):
    g, _, index, cfg, params = toy_setup()
    state = AdamState.fresh(params)
    path = str(tmp_path / "c.ckpt")
    training.save_checkpoint(path, params, state, epoch=0, seed=0)
    with pytest.raises(FormatError, match="entities"):
        training.load_checkpoint(path, expected_entities=params.num_entities + 1)


def test_checkpoint_corrupt_file_rejected(tmp_path):
    path = tmp_path / "c.ckpt"
    path.write_bytes(b"garbage")
    with pytest.raises(FormatError):
        training.load_checkpoint(str(path))


def test_resume_matches_uninterrupted_run(tmp_path):
    loss = LossConfig(gamma1=1.0, gamma2=1.0, k1=3, k2=3)

    g, _, index, cfg, params = toy_setup(loss=loss)
    state = AdamState.fresh(params)
    for epoch in range(5):
        training.train_epoch(g, params, index, cfg, state, epoch)

    g2, _, index2, cfg2, params2 = toy_setup(loss=loss)
    state2 = AdamState.fresh(params2)
    for epoch in range(3):
        training.train_epoch(g2, params2, index2, cfg2, state2, epoch)
    path = str(tmp_path / "mid.ckpt")
    training.save_checkpoint(path, params2, state2, epoch=3, seed=cfg2.seed)
    params3, state3, next_epoch, _ = training.load_checkpoint(path)
    for epoch in range(next_epoch, 5):
        training.train_epoch(g2, params3, index2, cfg2, state3, epoch)

    for name in ("entity", "relation", "kernels", "projection"):
        assert np.array_equal(getattr(params, name), getattr(params3, name))


def test_run_training_writes_metrics_and_checkpoint(tmp_path):
    g, emb, index, cfg, _ = toy_setup()
    run_dir = str(tmp_path / "run")
    params, history = training.run_training(
        g, cfg, run_dir, index=index, entity_init=emb, log_fn=None
    )
    assert len(history) == cfg.epochs
    metrics = open(f"{run_dir}/metrics.jsonl", encoding="utf-8").read().splitlines()
    assert len(metrics) == cfg.epochs
    loaded, _, epoch, _ = training.load_checkpoint(f"{run_dir}/checkpoint.ckpt")
    assert epoch == cfg.epochs
    assert np.array_equal(loaded.entity, params.entity)
