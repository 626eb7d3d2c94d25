import json

import pytest

from ldenhancer import Config, LossWeights, NetworkConfig, TrainConfig, apply_overrides, load_config, save_config


class TestRoundTrip:
    def test_json_round_trip(self, tmp_path):
        config = Config(
            network=NetworkConfig(input_size=128, seed=3),
            train=TrainConfig(epochs=5, learning_rate=2e-6),
            loss=LossWeights(exposure_level=0.5),
        )
        path = tmp_path / "config.json"
        save_config(config, path)
        loaded = load_config(path)
        assert loaded == config

    def test_sections_optional(self):
        config = Config.from_dict({"train": {"epochs": 7}})
        assert config.train.epochs == 7
        assert config.network.input_size == 256

    def test_unknown_section_rejected(self):
        with pytest.raises(ValueError, match="unknown config sections"):
            Config.from_dict({"trian": {}})

    def test_json_lists_become_channel_tuples(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"network": {"extractor_channels": [4, 4, 8, 8]}}))
        assert load_config(path).network.extractor_channels == (4, 4, 8, 8)


class TestOverrides:
    def test_typed_coercion(self):
        config = apply_overrides(
            Config(),
            ["train.epochs=12", "train.learning_rate=1e-5", "loss.exposure_level=0.5",
             "network.extractor_channels=4,4,8,8"],
        )
        assert config.train.epochs == 12
        assert config.train.learning_rate == 1e-5
        assert config.loss.exposure_level == 0.5
        assert config.network.extractor_channels == (4, 4, 8, 8)

    def test_overrides_are_validated(self):
        with pytest.raises(ValueError):
            apply_overrides(Config(), ["train.epochs=0"])
        with pytest.raises(ValueError, match="unknown config field"):
            apply_overrides(Config(), ["train.epoochs=3"])
        with pytest.raises(ValueError, match="key=value"):
            apply_overrides(Config(), ["train.epochs"])
        with pytest.raises(ValueError, match="section.field"):
            apply_overrides(Config(), ["epochs=3"])

    def test_original_config_untouched(self):
        config = Config()
        apply_overrides(config, ["train.epochs=9"])
        assert config.train.epochs == 100


class TestValidation:
    def test_loss_weight_invariants(self):
        with pytest.raises(ValueError, match="non-negative"):
            LossWeights(spatial=-1.0)
        with pytest.raises(ValueError, match="exposure_level"):
            LossWeights(exposure_level=1.5)

    def test_train_positivity(self):
        with pytest.raises(ValueError, match="positive"):
            TrainConfig(batch_size=0)

    def test_network_attention_dim_tied_to_extractor(self):
        with pytest.raises(ValueError, match="attention_dim"):
            NetworkConfig(attention_dim=16)
