"""Scheme construction, validation, and serialization."""

import pytest

from nestmark import (
    DuplicateOffsetError,
    EmptyLayersError,
    GammaOutOfRangeError,
    GenerationParams,
    SchemeValidationError,
    VocabSpec,
    WatermarkLayer,
    WatermarkScheme,
    default_scheme,
    scheme_from_json,
    scheme_to_json,
    validate_scheme,
)


def test_default_scheme_matches_canonical_configuration():
    scheme = default_scheme()
    assert scheme.gamma == 0.5
    assert scheme.theta == 4.0
    assert [layer.delta for layer in scheme.layers] == [1.5, 2.5]
    assert [layer.offset for layer in scheme.layers] == [1, 2]
    assert len(scheme.layers) == 2


def test_validate_returns_scheme_unchanged_and_is_idempotent():
    scheme = default_scheme()
    once = validate_scheme(scheme, VocabSpec(1000))
    twice = validate_scheme(once, VocabSpec(1000))
    assert once is scheme
    assert twice is scheme


def test_duplicate_offsets_rejected():
    scheme = WatermarkScheme(
        layers=(
            WatermarkLayer(key=b"a", offset=1, delta=1.5),
            WatermarkLayer(key=b"b", offset=1, delta=2.5),
        )
    )
    with pytest.raises(DuplicateOffsetError):
        validate_scheme(scheme)


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.25, 1.5])
def test_gamma_must_be_strictly_inside_unit_interval(gamma):
    scheme = WatermarkScheme(
        layers=(WatermarkLayer(key=b"a", offset=1, delta=1.0),), gamma=gamma
    )
    with pytest.raises(GammaOutOfRangeError):
        validate_scheme(scheme)


def test_empty_layers_rejected():
    with pytest.raises(EmptyLayersError):
        validate_scheme(WatermarkScheme(layers=()))


def test_layer_invariants_enforced_at_construction():
    with pytest.raises(ValueError):
        WatermarkLayer(key=b"a", offset=0, delta=1.0)
    with pytest.raises(ValueError):
        WatermarkLayer(key=b"a", offset=1, delta=-0.5)
    with pytest.raises(TypeError):
        WatermarkLayer(key="not-bytes", offset=1, delta=1.0)


def test_vocab_spec_requires_two_tokens():
    with pytest.raises(ValueError):
        VocabSpec(1)
    assert VocabSpec(2).vocab_size == 2


def test_generation_params_invariants():
    with pytest.raises(ValueError):
        GenerationParams(max_tokens=0)
    with pytest.raises(ValueError):
        GenerationParams(temperature=0.0)
    with pytest.raises(ValueError):
        GenerationParams(decode_mode="beam")
    params = GenerationParams()
    assert params.max_tokens == 300


def test_scheme_json_round_trip():
    scheme = default_scheme(key1=b"k1", key2=b"\x00\xffkey")
    text = scheme_to_json(scheme)
    back = scheme_from_json(text)
    assert back == scheme
    assert '"key_hex"' in text


def test_scheme_json_rejects_garbage():
    with pytest.raises(SchemeValidationError):
        scheme_from_json("not json at all")
    with pytest.raises(SchemeValidationError):
        scheme_from_json('{"gamma": 0.5, "theta": 4.0}')
    with pytest.raises(SchemeValidationError):
        scheme_from_json(
            '{"gamma": 0.5, "theta": 4.0,'
            ' "layers": [{"key_hex": "zz", "offset": 1, "delta": 1.0}]}'
        )


def test_with_deltas_replaces_layer_biases():
    scheme = default_scheme()
    zeroed = scheme.with_deltas(0.0, 0.0)
    assert all(layer.delta == 0.0 for layer in zeroed.layers)
    assert [layer.key for layer in zeroed.layers] == [
        layer.key for layer in scheme.layers
    ]
    with pytest.raises(ValueError):
        scheme.with_deltas(1.0)
