"""Cross-component contract: output must feed the consumer as-is.

Prints one pass/fail line like the consumer's own release gate. Skips
when the consumer package is not installed.
"""

import cv2
import numpy as np
import pytest

paloc_interchange = pytest.importorskip("paloc.interchange")

from pal_extractor.backbone import load_backbone
from pal_extractor.cli import main
from pal_extractor.descriptor import ExtractorConfig, describe_image


def _check(name, ok, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}{suffix}")
    assert ok, f"{name}{suffix}"


def _write_frames(tmp_path, n, seed=0):
    frame_dir = tmp_path / "frames"
    frame_dir.mkdir()
    rng = np.random.default_rng(seed)
    for t in range(n):
        img = rng.integers(0, 256, size=(120, 480, 3), dtype=np.uint8)
        cv2.imwrite(str(frame_dir / f"frame_{t:03d}.png"), img)
    return frame_dir


def test_sidecar_roundtrip_into_consumer(tmp_path):
    frame_dir = _write_frames(tmp_path, 10)
    out = tmp_path / "deep.pald"
    rc = main([
        "--input", str(frame_dir), "--output", str(out),
        "--parts", "4", "--size", "224",
    ])
    assert rc == 0

    descs = paloc_interchange.read_descriptors(out)
    count_ok = descs.values.shape == (10, 512)
    norms = np.linalg.norm(descs.values.astype(np.float64), axis=1)
    norm_err = float(np.abs(norms - 1.0).max())
    norms_ok = norm_err <= 1e-4

    cfg = ExtractorConfig(
        input_dir=frame_dir, output_file=out, parts=4, input_size=224,
        backbone="resnet18", aggregation="sum",
    )
    backbone = load_backbone(cfg.backbone)
    rng = np.random.default_rng(9)
    img = rng.uniform(0, 1, size=(120, 480, 3)).astype(np.float32)
    base = describe_image(img, cfg, backbone)
    order_err = 0.0
    for _ in range(3):
        order = list(rng.permutation(4))
        permuted = describe_image(img, cfg, backbone, part_order=order)
        order_err = max(order_err, float(np.abs(permuted - base).max()))
    order_ok = order_err <= 1e-5

    _check(
        "sidecar round-trip",
        count_ok and norms_ok and order_ok,
        f"10x512 parsed by consumer, max norm error {norm_err:.1e}, "
        f"sum order error {order_err:.1e}",
    )


def test_cli_error_paths(tmp_path, capsys):
    rc = main(["--input", str(tmp_path / "nope"), "--output", str(tmp_path / "o")])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")

    empty = tmp_path / "empty"
    empty.mkdir()
    rc = main(["--input", str(empty), "--output", str(tmp_path / "o")])
    assert rc == 1
    assert "no image frames" in capsys.readouterr().err
