"""Tests for ou_sector.utils."""

import pytest

from ou_sector.utils import canonical_json, config_digest, derive_seed, parse_p_list


class TestParsePList:
    def test_comma_separated(self):
        assert parse_p_list("1.5,2,4") == [1.5, 2.0, 4.0]

    def test_spaces(self):
        assert parse_p_list("  1.5, 2  4 ") == [1.5, 2.0, 4.0]

    def test_exponent_notation(self):
        assert parse_p_list("1e1") == [10.0]

    def test_p_one_rejected(self):
        with pytest.raises(ValueError, match="p must exceed 1"):
            parse_p_list("2,1")

    def test_garbage_rejected(self):
        with pytest.raises(ValueError, match="Invalid p value"):
            parse_p_list("2,abc")

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            parse_p_list("")


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(0, "forms") == derive_seed(0, "forms")

    def test_labels_separate_streams(self):
        seeds = {derive_seed(0, "model"), derive_seed(0, "forms"), derive_seed(1, "forms"), derive_seed(0, "forms", "retry")}
        assert len(seeds) == 4

    def test_fits_in_63_bits(self):
        assert 0 <= derive_seed(123, "x", 4) < 2**63


class TestConfigDigest:
    def test_key_order_irrelevant(self):
        assert config_digest({"a": 1, "b": [1, 2]}) == config_digest({"b": [1, 2], "a": 1})

    def test_content_sensitive(self):
        assert config_digest({"seed": 0}) != config_digest({"seed": 1})
        assert len(config_digest({})) == 16

    def test_canonical_json_is_compact(self):
        assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'
