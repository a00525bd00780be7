from __future__ import annotations

import json

import pytest

from usrep.config import ConfigError, ToolConfig, load_config


def test_defaults():
    config = load_config()
    assert config.delimiters == ",;.，；。"
    assert config.fragment_join == ","
    assert config.terminal_mark == "."
    assert config.bleu_mode == "corpus"
    assert config.cider_scale == 10.0
    assert config.image_token_count == 1
    assert config.query_images is True


def test_file_overrides_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"bleu_mode": "sentence", "cider_scale": 1}), encoding="utf-8")
    config = load_config(path)
    assert config.bleu_mode == "sentence"
    assert config.cider_scale == 1.0


def test_flags_override_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"bleu_mode": "sentence"}), encoding="utf-8")
    config = load_config(path, {"bleu_mode": "corpus"})
    assert config.bleu_mode == "corpus"


def test_none_overrides_are_ignored(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"bleu_mode": "sentence"}), encoding="utf-8")
    config = load_config(path, {"bleu_mode": None})
    assert config.bleu_mode == "sentence"


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"bleu_modes": "sentence"}), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{nope", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_bad_values_rejected():
    with pytest.raises(ConfigError):
        ToolConfig(bleu_mode="document")
    with pytest.raises(ConfigError):
        ToolConfig(delimiters="")
    with pytest.raises(ConfigError):
        ToolConfig(image_token_count=0)
    with pytest.raises(ConfigError):
        ToolConfig(cider_scale=-1)


def test_as_dict_is_json_serializable():
    payload = ToolConfig().as_dict()
    assert json.dumps(payload)
    assert payload["delimiters"] == ",;.，；。"


def test_prompt_texts_have_all_four_types():
    config = ToolConfig()
    assert set(config.prompt_texts) == {
        "zh_from_images",
        "en_from_images",
        "en_from_zh_query",
        "zh_from_en_query",
    }
