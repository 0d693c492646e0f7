import gzip
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from wtm.data import (BinaryDataset, LabelRangeError, MissingHeaderError, ParseError, RowWidthError, TruncatedError,
                      binarize_grayscale, encode_connect4, load_dataset, read_connect4, read_idx, read_idx_pair,
                      save_dataset, save_text, split_dataset, write_idx)
from wtm.sampling import Rng


def datasets(max_rows=30, max_o=40):
    return st.tuples(st.integers(0, max_rows), st.integers(1, max_o), st.integers(1, 12), st.integers(0, 2**32)).map(
        lambda a: _random_dataset(*a))


def _random_dataset(n, o, k, seed):
    gen = np.random.default_rng(seed)
    return BinaryDataset(gen.integers(0, 2, (n, o)), gen.integers(0, k, n), k)


# ---------------------------------------------------------------------------
# grayscale


def test_binarize_examples():
    assert binarize_grayscale([0, 76, 77, 255]).tolist() == [0, 0, 1, 1]
    assert binarize_grayscale([[10, 200]], threshold=128).tolist() == [[0, 1]]


def test_binarize_rejects_bad_input():
    with pytest.raises(ValueError):
        binarize_grayscale([0, 256])
    with pytest.raises(ValueError):
        binarize_grayscale([0], threshold=300)


@given(hnp.arrays(np.int64, st.integers(1, 50), elements=st.integers(0, 255)), st.integers(0, 254))
def test_binarize_is_monotone_in_threshold(pixels, t):
    assert np.all(binarize_grayscale(pixels, t + 1) <= binarize_grayscale(pixels, t))


# ---------------------------------------------------------------------------
# Connect-4


def test_empty_board_is_all_zero():
    assert encode_connect4(["b"] * 42).tolist() == [0] * 84


def test_first_cell_per_player():
    board = ["b"] * 42
    board[0] = "x"
    bits = encode_connect4(board)
    assert bits[0] == 1 and bits.sum() == 1
    board[0] = "o"
    bits = encode_connect4(board)
    assert bits[42] == 1 and bits.sum() == 1


def test_grid_input_matches_column_order():
    grid = np.zeros((6, 7), dtype=int)
    grid[1, 0] = 1  # second cell of column a
    grid[0, 1] = 2  # first cell of column b
    bits = encode_connect4(grid.tolist())
    assert np.flatnonzero(bits).tolist() == [1, 42 + 6]


@given(st.lists(st.sampled_from("bxo"), min_size=42, max_size=42))
def test_planes_count_pieces_and_are_disjoint(cells):
    bits = encode_connect4(cells)
    assert bits[:42].sum() == cells.count("x") and bits[42:].sum() == cells.count("o")
    assert not np.any(bits[:42] & bits[42:])


def test_bad_cells():
    with pytest.raises(ParseError):
        encode_connect4(["b"] * 41)
    with pytest.raises(ParseError):
        encode_connect4(["q"] + ["b"] * 41)


def test_read_connect4(tmp_path):
    rows = [",".join(["b"] * 42 + ["win"]), ",".join(["x"] + ["b"] * 41 + ["loss"]),
            ",".join(["o"] + ["b"] * 41 + ["draw"])]
    p = tmp_path / "c4.data.gz"
    with gzip.open(p, "wt") as f:
        f.write("\n".join(rows) + "\n")
    d = read_connect4(p)
    assert d.labels.tolist() == [0, 1, 2] and d.o == 84 and d.n_classes == 3
    assert d.features.sum(axis=1).tolist() == [0, 1, 1]


def test_read_connect4_errors(tmp_path):
    p = tmp_path / "c4.data"
    p.write_text(",".join(["b"] * 42 + ["win"]) + "\n" + ",".join(["b"] * 40 + ["win"]) + "\n")
    with pytest.raises(RowWidthError, match="line 2"):
        read_connect4(p)
    p.write_text(",".join(["b"] * 42 + ["maybe"]) + "\n")
    with pytest.raises(LabelRangeError):
        read_connect4(p)


# ---------------------------------------------------------------------------
# IDX


@pytest.mark.parametrize("suffix", ["idx", "idx.gz"])
def test_idx_round_trip(tmp_path, suffix):
    a = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
    write_idx(tmp_path / f"a.{suffix}", a)
    np.testing.assert_array_equal(read_idx(tmp_path / f"a.{suffix}"), a)


def test_idx_pair(tmp_path):
    write_idx(tmp_path / "img", np.array([[[0, 255], [100, 50]], [[77, 76], [0, 0]]], dtype=np.uint8))
    write_idx(tmp_path / "lab", np.array([3, 9], dtype=np.uint8))
    d = read_idx_pair(tmp_path / "img", tmp_path / "lab")
    assert d.features.tolist() == [[0, 1, 1, 0], [1, 0, 0, 0]]
    assert d.labels.tolist() == [3, 9] and d.n_classes == 10


def test_truncated_idx(tmp_path):
    p = tmp_path / "a.idx"
    write_idx(p, np.zeros((5, 4), dtype=np.uint8))
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(TruncatedError):
        read_idx(p)


# ---------------------------------------------------------------------------
# WTMD and text


@given(datasets())
def test_wtmd_round_trip(tmp_path_factory, d):
    p = tmp_path_factory.mktemp("d") / "x.wtmd"
    save_dataset(d, p)
    assert load_dataset(p) == d


@given(datasets())
def test_text_round_trip(tmp_path_factory, d):
    if len(d) == 0:
        return
    p = tmp_path_factory.mktemp("d") / "x.txt"
    save_text(d, p)
    assert load_dataset(p) == d


def test_wtmd_layout(tmp_path):
    d = BinaryDataset(np.array([[1, 0, 0, 0, 0, 0, 0, 0, 1]]), np.array([2]), 3)
    save_dataset(d, tmp_path / "x")
    raw = (tmp_path / "x").read_bytes()
    assert raw == struct.pack("<4sBIIQ", b"WTMD", 1, 9, 3, 1) + struct.pack("<I", 2) + bytes([0b1, 0b1])


def test_empty_file_has_no_header(tmp_path):
    (tmp_path / "e").write_bytes(b"")
    with pytest.raises(MissingHeaderError):
        load_dataset(tmp_path / "e")
    with pytest.raises(MissingHeaderError):
        load_dataset(tmp_path / "e", format="text")


def test_truncated_wtmd(tmp_path):
    d = _random_dataset(10, 20, 2, 1)
    save_dataset(d, tmp_path / "x")
    raw = (tmp_path / "x").read_bytes()
    (tmp_path / "x").write_bytes(raw[:-1])
    with pytest.raises(TruncatedError):
        load_dataset(tmp_path / "x")


def test_wtmd_label_out_of_range(tmp_path):
    raw = struct.pack("<4sBIIQ", b"WTMD", 1, 3, 2, 1) + struct.pack("<I", 5) + b"\x00"
    (tmp_path / "x").write_bytes(raw)
    with pytest.raises(LabelRangeError, match="row 0"):
        load_dataset(tmp_path / "x")


def test_text_row_width_names_line(tmp_path):
    (tmp_path / "t").write_text("# classes=2\n0 0101\n1 0110\n1 011\n")
    with pytest.raises(RowWidthError, match="line 4"):
        load_dataset(tmp_path / "t")


def test_text_header_bounds_labels(tmp_path):
    (tmp_path / "t").write_text("# classes=2\n0 01\n2 10\n")
    with pytest.raises(LabelRangeError):
        load_dataset(tmp_path / "t")
    (tmp_path / "t").write_text("0 01\n2 10\n")
    assert load_dataset(tmp_path / "t").n_classes == 3


def test_text_garbage(tmp_path):
    (tmp_path / "t").write_text("zero 0101\n")
    with pytest.raises(ParseError):
        load_dataset(tmp_path / "t")


def test_dataset_validation():
    with pytest.raises(ValueError):
        BinaryDataset(np.array([[2]]), np.array([0]), 1)
    with pytest.raises(ValueError):
        BinaryDataset(np.array([[1]]), np.array([1]), 1)
    with pytest.raises(ValueError):
        BinaryDataset(np.array([[1], [0]]), np.array([0]), 1)


# ---------------------------------------------------------------------------
# splitting


def test_split_sizes():
    d = _random_dataset(100, 5, 3, 0)
    train, test = split_dataset(d, 0.1, Rng(0))
    assert (len(train), len(test)) == (90, 10)


@given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 2**32))
def test_split_partitions_rows(n, frac, seed):
    # each row carries its own index in binary
    idx = np.arange(n)
    tagged = BinaryDataset(((idx[:, None] >> np.arange(8)) & 1).astype(np.uint8), idx % 2, 2)
    train, test = split_dataset(tagged, frac, Rng(seed))
    ids = lambda s: (s.features * (1 << np.arange(8))).sum(axis=1).tolist()
    assert sorted(ids(train) + ids(test)) == list(range(n))
    assert len(test) == round(n * frac)
    again = split_dataset(tagged, frac, Rng(seed))
    assert again[0] == train and again[1] == test


def test_split_fraction_bounds():
    with pytest.raises(ValueError):
        split_dataset(_random_dataset(10, 2, 2, 0), 1.0, Rng(0))
