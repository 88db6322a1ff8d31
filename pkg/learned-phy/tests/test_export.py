"""Message export formats and the learned-pilot statistics."""

import csv
import json

import numpy as np
import pytest
import torch

from learnedphy.config import NetConfig
from learnedphy.export import (export_messages, message_stats, pilot_positions,
                               sample_messages)
from learnedphy.model import Transceiver

CFG = NetConfig.tiny()


@pytest.fixture(scope="module")
def model():
    torch.manual_seed(3)
    return Transceiver(CFG, interleaver_seed=7).eval()


def test_sample_messages_shapes_and_determinism(model):
    bits, x = sample_messages(model, 700, seed=4, batch=256)
    assert bits.shape == (700, CFG.k) and bits.dtype == np.uint8
    assert x.shape == (700, CFG.n) and np.iscomplexobj(x)
    bits2, x2 = sample_messages(model, 700, seed=4, batch=256)
    assert np.array_equal(bits, bits2) and np.array_equal(x, x2)
    # per-frame normalization pins the grand mean power at one
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, abs=1e-5)


def test_sample_messages_constant_envelope(model):
    _, x = sample_messages(model, 100, constant_envelope=True)
    assert np.abs(np.abs(x) - 1.0).max() < 1e-5


def test_message_stats_hand_case():
    x = np.array([[1.0, 1j], [1.0, -1j]])
    power, variance = message_stats(x)
    assert power == pytest.approx([1.0, 1.0])
    assert variance == pytest.approx([0.0, 1.0])
    with pytest.raises(ValueError):
        message_stats(np.ones(4))


def test_pilot_positions_selects_low_variance_high_power():
    var = np.array([1.0, 1.0, 0.01])
    power = np.array([0.9, 0.9, 3.0])
    assert pilot_positions(power, var).tolist() == [2]
    # uniform variance: nothing is pilot-like
    assert pilot_positions(np.ones(4), np.ones(4)).size == 0


def test_export_jsonl_format(model, tmp_path):
    path = tmp_path / "msgs.jsonl"
    bits, x = export_messages(model, 40, path, seed=9)
    lines = path.read_text().strip().split("\n")
    assert len(lines) == 40
    for i, line in enumerate(lines):
        obj = json.loads(line)
        assert set(obj) == {"bits", "symbols"}
        assert obj["bits"] == [int(b) for b in bits[i]]
        sym = np.array(obj["symbols"])
        assert sym.shape == (CFG.n, 2)
        np.testing.assert_allclose(sym[:, 0] + 1j * sym[:, 1], x[i], atol=1e-12)


def test_export_stats_csv(model, tmp_path):
    path = tmp_path / "msgs.jsonl"
    stats = tmp_path / "stats.csv"
    _, x = export_messages(model, 200, path, stats_path=stats, seed=2)
    with open(stats) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == CFG.n
    power, variance = message_stats(x)
    for i, row in enumerate(rows):
        assert int(row["position"]) == i
        assert float(row["power"]) == pytest.approx(power[i], rel=1e-6)
        assert float(row["variance"]) == pytest.approx(variance[i], rel=1e-6)


def test_export_rejects_empty(model, tmp_path):
    with pytest.raises(ValueError):
        export_messages(model, 0, tmp_path / "x.jsonl")


def test_export_reimports_through_reference_loader(model, tmp_path):
    from shortpacket.metrics import load_message_jsonl

    path = tmp_path / "msgs.jsonl"
    bits, x = export_messages(model, 25, path, seed=1)
    loaded_bits, loaded_syms = load_message_jsonl(path)
    assert loaded_bits.shape == (25, CFG.k)
    np.testing.assert_array_equal(loaded_bits, bits)
    np.testing.assert_allclose(loaded_syms, x, atol=1e-12)
