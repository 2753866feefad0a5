import numpy as np
import pandas as pd
import pytest

from src.data import PairedDataset
from src.errors import ConfigError
from src.evaluation import Evaluator
from src.models import count_parameters, load_checkpoint
from src.training import (
    LOG_NAME, DataGenerator, RunConfig, Trainer, checkpoint_name, load_config, load_trained_model,
)
from src.training.config import RESOLVED_CONFIG_NAME, config_from_text
from src.training.trainer import LOG_COLUMNS


def tiny_config(overrides, *extra):
    return load_config(preset="tiny", overrides=list(overrides) + list(extra))


def test_config_layers_apply_in_order(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[train]\nbatch_size = 3\nlr = 0.5\n\n[freq]\nenabled = no\n")
    cfg = load_config(ini, preset="tiny", overrides=["train.lr=0.25"])
    assert cfg.train.lr == 0.25
    assert cfg.train.batch_size == 3
    assert cfg.freq.enabled is False
    assert cfg.schedule.T == 50
    assert cfg.schedule.beta_start == 1e-4
    assert cfg.kan.layers_per_block == 2


def test_config_value_coercion():
    cfg = load_config(overrides=["train.phase1_steps=1e6", "model.channel_mults=1, 2, 4", "kan.grid_size=8"])
    assert cfg.train.phase1_steps == 1_000_000
    assert cfg.model.channel_mults == [1, 2, 4]
    assert cfg.model.kan.grid_size == 8


@pytest.mark.parametrize("overrides", [
    ["train.learning_rate=0.1"],
    ["optimizer.lr=0.1"],
    ["train.batch_size=many"],
    ["train.patch_size=33"],
    ["train.phase=3"],
    ["schedule.T=0"],
    ["kan.grid_min=2.0"],
    ["freq.gamma_amp=-1"],
    ["train.lr"],
])
def test_invalid_overrides_raise_config_error(overrides):
    with pytest.raises(ConfigError):
        load_config(overrides=overrides)


def test_unknown_preset_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(preset="huge")
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.ini")


def test_ini_dump_round_trips():
    cfg = load_config(preset="tiny", overrides=["freq.t_draw=fixed", "freq.fixed_t=3"])
    assert config_from_text(cfg.to_ini()) == cfg


def test_phase2_requires_phase1_checkpoint(tiny_overrides, tmp_path):
    with pytest.raises(ConfigError, match="init_checkpoint"):
        Trainer(tiny_config(tiny_overrides, "train.phase=2"))
    with pytest.raises(ConfigError, match="not found"):
        Trainer(tiny_config(tiny_overrides, "train.phase=2", f"train.init_checkpoint={tmp_path / 'x'}"))


def test_checkpoint_names():
    assert checkpoint_name(1) == "phase1_final.safetensors"
    assert checkpoint_name(2, 500) == "phase2_step0000500.safetensors"


@pytest.fixture
def phase1_run(tiny_overrides, tmp_path):
    """A finished 10-step phase-1 run."""
    trainer = Trainer(tiny_config(tiny_overrides))
    final = trainer.train(verbose=False)
    return trainer, final, tmp_path / "ckpt"


def test_phase1_run_writes_outputs(phase1_run):
    trainer, final, ckpt_dir = phase1_run
    assert final == ckpt_dir / "phase1_final.safetensors"
    assert (ckpt_dir / "phase1_step0000005.safetensors").is_file()
    assert (ckpt_dir / RESOLVED_CONFIG_NAME).is_file()
    assert len(trainer.losses) == 10
    assert np.all(np.isfinite(trainer.losses))

    log = pd.read_csv(ckpt_dir / LOG_NAME)
    assert list(log.columns) == LOG_COLUMNS
    assert log["step"].tolist() == [2, 4, 6, 8, 10]
    assert (log["phase"] == 1).all()

    ckpt = load_checkpoint(final)
    assert ckpt.step == 10 and ckpt.phase == 1
    assert ckpt.adam_steps and all(t == 10 for t in ckpt.adam_steps.values())


def test_trained_model_enhances_odd_sized_images(phase1_run, rng):
    _, final, _ = phase1_run
    model = load_trained_model(final)
    image = rng.uniform(0, 0.3, (3, 10, 13))
    out = model.enhancer(seed=0).enhance(image)
    assert out.shape == image.shape
    assert np.all(np.isfinite(out))
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_same_seed_gives_identical_losses(phase1_run, tiny_overrides, tmp_path):
    first, _, _ = phase1_run
    again = Trainer(tiny_config(tiny_overrides, f"io.checkpoint_dir={tmp_path / 'again'}"))
    again.train(verbose=False)
    assert again.losses == first.losses


def test_resume_continues_the_same_trajectory(phase1_run, tiny_overrides):
    first, _, ckpt_dir = phase1_run
    resumed = Trainer(tiny_config(tiny_overrides), resume=ckpt_dir / "phase1_step0000005.safetensors")
    assert resumed.start_step == 5
    resumed.train(verbose=False)
    np.testing.assert_allclose(resumed.losses, first.losses[5:], rtol=1e-6)
    assert pd.read_csv(ckpt_dir / LOG_NAME)["step"].tolist() == [2, 4, 6, 8, 10]


def test_resume_rejects_other_phase(phase1_run, tiny_overrides):
    _, final, _ = phase1_run
    with pytest.raises(ConfigError, match="resume"):
        Trainer(tiny_config(tiny_overrides, "train.phase=2", f"train.init_checkpoint={final}"),
                resume=final)


def test_phase2_freezes_uncertainty_and_adds_frequency_loss(phase1_run, tiny_overrides):
    _, final, ckpt_dir = phase1_run
    phase1 = load_checkpoint(final)
    trainer = Trainer(tiny_config(tiny_overrides, "train.phase=2", f"train.init_checkpoint={final}"))
    assert trainer.net.uncertainty_frozen()
    out = trainer.train(verbose=False)
    assert out.name == "phase2_final.safetensors"

    for name, p in trainer.net.named_parameters():
        if name.startswith("uncertainty_"):
            np.testing.assert_array_equal(p.data, phase1.weights[name])
    assert not np.array_equal(trainer.net.noise_head.kernel.data, phase1.weights["noise_head.kernel"])

    log = pd.read_csv(ckpt_dir / LOG_NAME)
    assert (log["phase"] == 1).sum() == 5
    phase2_rows = log[log["phase"] == 2]
    assert phase2_rows["step"].tolist() == [2, 4]
    assert (phase2_rows["freq_loss"] > 0).all()

    phase2 = load_checkpoint(out)
    assert phase2.phase == 2
    assert set(phase2.frozen) == {n for n in phase2.weights if n.startswith("uncertainty_")}


def test_phase2_cannot_start_from_phase2_checkpoint(phase1_run, tiny_overrides):
    _, final, _ = phase1_run
    trainer = Trainer(tiny_config(tiny_overrides, "train.phase=2", f"train.init_checkpoint={final}"))
    phase2_final = trainer.train(verbose=False)
    with pytest.raises(ConfigError, match="not a phase-1"):
        Trainer(tiny_config(tiny_overrides, "train.phase=2", f"train.init_checkpoint={phase2_final}"))


def test_generated_pairs_follow_gamma_curve():
    low, high = DataGenerator(size=16, gamma=0.4, seed=3).generate_pair()
    assert low.shape == high.shape == (3, 16, 16)
    assert low.max() <= 0.35 + 1e-12
    np.testing.assert_allclose(high, low ** 0.4)
    again, _ = DataGenerator(size=16, gamma=0.4, seed=3).generate_pair()
    np.testing.assert_array_equal(low, again)


@pytest.mark.parametrize("kwargs", [dict(gamma=1.5), dict(channels=2)])
def test_generator_rejects_bad_settings(kwargs):
    with pytest.raises(ValueError):
        DataGenerator(**kwargs)


def test_default_run_config_validates():
    cfg = RunConfig().validate()
    assert cfg.model.divisor == 4


# desk-scale learning runs on four generated 48x48 pairs

TARGET_PSNR = 25.0
LEARNING_STEPS = 4000
SCORE_INTERVAL = 500


def learning_overrides(root, ckpt_dir, *extra):
    return [
        f"data.root={root}",
        f"io.checkpoint_dir={ckpt_dir}",
        "train.batch_size=4",
        "train.patch_size=48",
        f"train.phase1_steps={LEARNING_STEPS}",
        "train.phase2_steps=1000",
        "io.log_interval=100",
        f"io.checkpoint_interval={SCORE_INTERVAL}",
        *extra,
    ]


def score(checkpoint, dataset):
    model = load_trained_model(checkpoint)
    report = Evaluator().evaluate_enhancer(model.enhancer(seed=0).enhance, dataset)
    return report.mean_psnr, report.mean_ssim


def steps_to_target(ckpt_dir, dataset):
    """First scored step whose mean PSNR clears the target, or None."""
    for step in range(SCORE_INTERVAL, LEARNING_STEPS, SCORE_INTERVAL):
        if score(ckpt_dir / checkpoint_name(1, step), dataset)[0] > TARGET_PSNR:
            return step
    if score(ckpt_dir / checkpoint_name(1), dataset)[0] > TARGET_PSNR:
        return LEARNING_STEPS
    return None


@pytest.fixture(scope="module")
def learning_runs(tmp_path_factory):
    """Phase-1 runs with both bottlenecks and phase-2 runs with and without the frequency term."""
    base = tmp_path_factory.mktemp("learning")
    root = base / "data"
    DataGenerator(size=48, seed=7).generate_dataset(root, 4)

    runs = {}
    for bottleneck in ("kan", "conv"):
        trainer = Trainer(load_config(preset="tiny", overrides=learning_overrides(
            root, base / bottleneck, f"model.bottleneck={bottleneck}",
        )))
        runs[bottleneck] = trainer.train(verbose=False)
        runs[f"{bottleneck}_params"] = count_parameters(trainer.net)

    for enabled in ("yes", "no"):
        trainer = Trainer(load_config(preset="tiny", overrides=learning_overrides(
            root, base / f"freq_{enabled}", "train.phase=2", f"train.init_checkpoint={runs['kan']}",
            f"freq.enabled={enabled}",
        )))
        runs[f"freq_{enabled}"] = trainer.train(verbose=False)
    return root, base, runs


@pytest.mark.slow
def test_two_phase_training_recovers_the_normal_images(learning_runs):
    root, _, runs = learning_runs
    psnr_db, ssim_value = score(runs["freq_yes"], PairedDataset(root))
    assert psnr_db > TARGET_PSNR
    assert ssim_value > 0.90


@pytest.mark.slow
def test_kan_bottleneck_learns_no_slower_than_conv(learning_runs):
    root, base, runs = learning_runs
    assert abs(runs["kan_params"] - runs["conv_params"]) < 0.15 * runs["conv_params"]

    dataset = PairedDataset(root)
    kan_steps = steps_to_target(base / "kan", dataset)
    conv_steps = steps_to_target(base / "conv", dataset)
    assert kan_steps is not None
    assert conv_steps is None or kan_steps <= conv_steps


@pytest.mark.slow
def test_frequency_term_does_not_hurt_ssim(learning_runs):
    root, _, runs = learning_runs
    dataset = PairedDataset(root)
    _, with_freq = score(runs["freq_yes"], dataset)
    _, without_freq = score(runs["freq_no"], dataset)
    assert with_freq >= without_freq - 0.01
