"""Smoke test for the masktrack extension module.

Build and run:
    cargo build -p masktrack-python --release --features extension-module
    cp target/release/libmasktrack.so python/masktrack.so
    python3 python/smoke_test.py
"""
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import masktrack  # noqa: E402


def check_masks():
    a = masktrack.Mask.rect(8, 6, 1, 1, 3, 2)
    b = masktrack.Mask.rect(8, 6, 2, 1, 3, 2)
    assert a.area() == 6
    assert abs(a.iou(b) - 4 / 8) < 1e-12
    assert abs(masktrack.mask_iou(a, b) - a.iou(b)) < 1e-12
    cx, cy = a.centroid()
    assert abs(cx - 2.0) < 1e-12 and abs(cy - 1.5) < 1e-12
    s = a.to_rle_string()
    assert masktrack.Mask.from_rle_string(s, 8, 6) == a
    dense = a.to_dense()
    assert masktrack.Mask.from_dense(8, 6, dense) == a
    assert masktrack.Mask(8, 6, a.runs) == a
    try:
        masktrack.Mask(8, 6, [10, 10])
    except ValueError:
        pass
    else:
        raise AssertionError("run total mismatch accepted")


def check_hungarian():
    cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]]
    pairs = masktrack.hungarian_min(cost)
    assert sum(cost[i][j] for i, j in pairs) == 5.0, pairs
    assert len(masktrack.hungarian_min([[1.0, 2.0, 3.0]])) == 1


def check_pipeline():
    cfg = masktrack.Config(theta_l=0.5)
    assert cfg.to_dict()["theta_l"] == "0.5"
    scen = masktrack.Scenario("lanes", 7)
    assert scen.frame_count == 40
    records, full = scen.track(cfg)
    assert abs(full["HOTA"] - 1.0) < 1e-12, full
    _, short = scen.track(cfg, mode="short_term")
    assert short["AssA"] < full["AssA"], (short, full)
    _, oracle = scen.track(mode="oracle_slta")
    assert abs(oracle["HOTA"] - 1.0) < 1e-12

    with tempfile.TemporaryDirectory() as tmp:
        def dump(path, rows):
            with open(path, "w") as f:
                for frame, tid, cls, rle in rows:
                    f.write(f"{frame} {tid} {cls} 160 240 {rle}\n")

        dump(os.path.join(tmp, "pred.txt"), records)
        dump(os.path.join(tmp, "gt.txt"), scen.ground_truth())
        rep = masktrack.evaluate(os.path.join(tmp, "pred.txt"), os.path.join(tmp, "gt.txt"))
        assert abs(rep["HOTA"] - 1.0) < 1e-12
        assert rep["IDSw"] == 0


if __name__ == "__main__":
    check_masks()
    check_hungarian()
    check_pipeline()
    print("smoke test passed")
