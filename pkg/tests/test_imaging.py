import numpy as np
import pytest
import torch

from hairedit.core import DTYPE, InputError
from hairedit.imaging import (
    decode_png_b64,
    encode_png_b64,
    from_uint8,
    image_from_png_bytes,
    load_image,
    load_image_dir,
    png_bytes,
    save_image,
    to_uint8,
)

from conftest import rand_image


class TestUint8Conversion:
    def test_round_trip_exact_for_8bit_values(self, rng):
        arr = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        img = from_uint8(arr)
        assert img.dtype == DTYPE
        assert img.min() >= 0 and img.max() <= 1
        back = to_uint8(img)
        assert np.array_equal(arr, back)

    def test_bad_shape_rejected(self):
        with pytest.raises(InputError):
            from_uint8(np.zeros((8, 8), dtype=np.uint8))


class TestPngRoundTrip:
    def test_file_round_trip(self, rng, tmp_path):
        img = from_uint8(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        path = save_image(img, tmp_path / "x.png")
        loaded = load_image(path)
        assert torch.equal(img, loaded)

    def test_bytes_round_trip(self, rng):
        img = from_uint8(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        assert torch.equal(image_from_png_bytes(png_bytes(img)), img)

    def test_b64_round_trip(self, rng):
        img = from_uint8(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        assert torch.equal(decode_png_b64(encode_png_b64(img)), img)

    def test_png_encoding_deterministic(self, rng):
        img = from_uint8(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        assert png_bytes(img) == png_bytes(img.clone())

    def test_resize_on_load(self, rng, tmp_path):
        img = from_uint8(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        path = save_image(img, tmp_path / "y.png")
        loaded = load_image(path, image_size=8, resize=True)
        assert loaded.shape == (3, 8, 8)
        with pytest.raises(InputError):
            load_image(path, image_size=8, resize=False)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_image(tmp_path / "absent.png")

    def test_invalid_b64(self):
        with pytest.raises(InputError):
            decode_png_b64("not base64 @@@")

    def test_invalid_png_bytes(self):
        with pytest.raises(InputError):
            image_from_png_bytes(b"definitely not a png")


class TestImageDir:
    def test_loads_sorted_images(self, rng, tmp_path):
        for name in ("b.png", "a.png"):
            save_image(from_uint8(rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)), tmp_path / name)
        images = load_image_dir(tmp_path, image_size=8)
        assert len(images) == 2

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(InputError):
            load_image_dir(tmp_path)

    def test_missing_dir_rejected(self, tmp_path):
        with pytest.raises(InputError):
            load_image_dir(tmp_path / "none")


class TestSplitList:
    def test_split_restricts_and_orders(self, rng, tmp_path):
        for name in ("a.png", "b.png", "c.png"):
            save_image(from_uint8(rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)), tmp_path / name)
        split = tmp_path / "split.txt"
        split.write_text("c.png\na.png\n")
        images = load_image_dir(tmp_path, image_size=8, split_file=split)
        assert len(images) == 2
        assert torch.equal(images[0], load_image(tmp_path / "c.png", 8))
        assert torch.equal(images[1], load_image(tmp_path / "a.png", 8))

    def test_split_with_missing_entry_rejected(self, rng, tmp_path):
        save_image(from_uint8(rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)), tmp_path / "a.png")
        split = tmp_path / "split.txt"
        split.write_text("a.png\nghost.png\n")
        with pytest.raises(InputError):
            load_image_dir(tmp_path, image_size=8, split_file=split)

    def test_missing_split_file_rejected(self, rng, tmp_path):
        save_image(from_uint8(rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)), tmp_path / "a.png")
        with pytest.raises(InputError):
            load_image_dir(tmp_path, image_size=8, split_file=tmp_path / "no_split.txt")
