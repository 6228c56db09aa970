import subprocess
import sys

import numpy as np
import pytest

from threshsteg.cli import main
from threshsteg.raster import RgbRaster, load_image, save_image
from threshsteg.region import read_key


@pytest.fixture
def cover_path(tmp_path, rng):
    p = tmp_path / "cover.png"
    save_image(RgbRaster(rng.integers(0, 256, (40, 48, 3), dtype=np.uint8)), p)
    return p


def run(capsysbinary, *argv):
    code = main([str(a) for a in argv])
    out = capsysbinary.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("method", ["threshold", "sobel", "canny"])
@pytest.mark.parametrize("fmt", ["png", "bmp"])
def test_embed_extract(capsysbinary, tmp_path, cover_path, method, fmt):
    stego, key = tmp_path / f"s.{fmt}", tmp_path / "k.key"
    code, out, _ = run(capsysbinary, "embed", "--cover", cover_path, "--message", "héllo wörld",
                       "--stego", stego, "--key", key, "--method", method, "--channel", "b")
    assert code == 0
    assert b"pairs:" in out and b"mse:" in out and b"psnr:" in out
    code, out, _ = run(capsysbinary, "extract", "--stego", stego, "--key", key)
    assert code == 0
    assert out == "héllo wörld".encode()


def test_message_file_and_out(capsysbinary, tmp_path, cover_path):
    msg = bytes(range(1, 60))
    (tmp_path / "m.bin").write_bytes(msg)
    args = ["embed", "--cover", cover_path, "--message-file", tmp_path / "m.bin",
            "--stego", tmp_path / "s.png", "--key", tmp_path / "k"]
    assert run(capsysbinary, *args)[0] == 0
    code, out, _ = run(capsysbinary, "extract", "--stego", tmp_path / "s.png", "--key",
                       tmp_path / "k", "--out", tmp_path / "o.bin")
    assert code == 0 and out == b""
    assert (tmp_path / "o.bin").read_bytes() == msg


def test_stego_differs_only_at_key_pixels(capsysbinary, tmp_path, cover_path):
    run(capsysbinary, "embed", "--cover", cover_path, "--message", "m" * 30, "--stego",
        tmp_path / "s.png", "--key", tmp_path / "k", "--channel", "g", "--method", "sobel")
    c, s = load_image(cover_path).pixels.astype(int), load_image(tmp_path / "s.png").pixels.astype(int)
    key = read_key(tmp_path / "k")
    d = s - c
    assert not d[:, :, 0].any() and not d[:, :, 2].any() and np.abs(d).max() == 1
    allowed = {(r, cc + k) for r, cc in key.pairs.tolist() for k in (0, 1)}
    assert set(zip(*np.nonzero(d[:, :, 1]))) <= allowed


def test_uniform_exit_2(capsysbinary, tmp_path):
    save_image(RgbRaster(np.full((8, 8, 3), 128, np.uint8)), tmp_path / "u.bmp")
    code, _, err = run(capsysbinary, "embed", "--cover", tmp_path / "u.bmp", "--message", "hi",
                       "--stego", tmp_path / "s.bmp", "--key", tmp_path / "k")
    assert code == 2 and b"capacity" in err
    assert not (tmp_path / "s.bmp").exists()


def test_determinism(capsysbinary, tmp_path, cover_path):
    outs = []
    for k in range(2):
        s, key = tmp_path / f"s{k}.png", tmp_path / f"k{k}"
        run(capsysbinary, "embed", "--cover", cover_path, "--message", "determinism",
            "--stego", s, "--key", key, "--seed", "12345", "--method", "canny")
        outs.append((s.read_bytes(), key.read_bytes()))
    assert outs[0] == outs[1]


def test_key_from_other_image_exit_4(capsysbinary, tmp_path, cover_path, rng):
    run(capsysbinary, "embed", "--cover", cover_path, "--message", "abc",
        "--stego", tmp_path / "s.png", "--key", tmp_path / "k")
    save_image(RgbRaster(rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)), tmp_path / "o.png")
    assert run(capsysbinary, "extract", "--stego", tmp_path / "o.png", "--key", tmp_path / "k")[0] == 4


def test_corrupt_key_exit_4(capsysbinary, tmp_path, cover_path, rng):
    run(capsysbinary, "embed", "--cover", cover_path, "--message", "abc",
        "--stego", tmp_path / "s.png", "--key", tmp_path / "k")
    good = (tmp_path / "k").read_bytes()
    for i in rng.choice(len(good), 10, replace=False):
        bad = bytearray(good)
        bad[i] ^= 1 << int(rng.integers(0, 8))
        (tmp_path / "bad").write_bytes(bytes(bad))
        code, _, err = run(capsysbinary, "extract", "--stego", tmp_path / "s.png", "--key", tmp_path / "bad")
        assert code == 4 and b"CRC" in err


def test_missing_cover_exit_3(capsysbinary, tmp_path):
    code, _, _ = run(capsysbinary, "embed", "--cover", tmp_path / "none.png", "--message", "x",
                     "--stego", tmp_path / "s.png", "--key", tmp_path / "k")
    assert code == 3


def test_usage_error_exit_1(capsysbinary):
    with pytest.raises(SystemExit) as exc:
        main(["embed", "--cover", "x.png"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1


@pytest.fixture
def row_image(tmp_path):
    px = np.zeros((1, 4, 3), np.uint8) + 9
    px[0, :, 0] = [10, 200, 50, 120]
    save_image(RgbRaster(px), tmp_path / "row.bmp")
    return tmp_path / "row.bmp"


def test_capacity_examples(capsysbinary, row_image):
    code, out, _ = run(capsysbinary, "capacity", "--cover", row_image, "--bits", "4")
    assert code == 0
    assert b"threshold: 70\n" in out and b"pairs_used: 2\n" in out and b"max_bits: 4\n" in out
    code, out, _ = run(capsysbinary, "capacity", "--cover", row_image, "--bits", "2")
    assert b"threshold: 190\n" in out and b"pairs_used: 1\n" in out and b"pairs_qualifying: 1\n" in out


def test_capacity_uniform_exit_2(capsysbinary, tmp_path):
    save_image(RgbRaster(np.full((4, 4, 3), 50, np.uint8)), tmp_path / "u.png")
    assert run(capsysbinary, "capacity", "--cover", tmp_path / "u.png", "--bits", "8")[0] == 2


def test_metrics_identical(capsysbinary, cover_path):
    code, out, _ = run(capsysbinary, "metrics", "--cover", cover_path, "--stego", cover_path)
    assert code == 0 and out == b"mse: 0.000000\npsnr: inf\n"


def test_metrics_one_pixel(capsysbinary, tmp_path):
    a = np.full((2, 2, 3), 100, np.uint8)
    b = a.copy()
    b[1, 0, 0] = 101
    save_image(RgbRaster(a), tmp_path / "a.png")
    save_image(RgbRaster(b), tmp_path / "b.png")
    code, out, _ = run(capsysbinary, "metrics", "--cover", tmp_path / "a.png", "--stego", tmp_path / "b.png")
    assert code == 0
    mse_line, psnr_line = out.decode().split()[1::2]
    assert mse_line == "0.250000"
    assert abs(float(psnr_line) - 54.1854) <= 1e-4
    code, out, _ = run(capsysbinary, "metrics", "--cover", tmp_path / "a.png", "--stego",
                       tmp_path / "b.png", "--channels", "all", "--psnr-denominator", "classic")
    assert out.decode().split()[1] == f"{1 / 12:.6f}"


def test_metrics_size_mismatch_exit_1(capsysbinary, tmp_path, cover_path):
    save_image(RgbRaster(np.zeros((3, 3, 3), np.uint8)), tmp_path / "small.png")
    assert run(capsysbinary, "metrics", "--cover", cover_path, "--stego", tmp_path / "small.png")[0] == 1


def test_module_entry_point(tmp_path, cover_path):
    res = subprocess.run([sys.executable, "-m", "threshsteg", "capacity", "--cover", str(cover_path),
                          "--bits", "16"], capture_output=True)
    assert res.returncode == 0 and res.stdout.startswith(b"threshold:")
