"""Smoke test for the `cspf` extension module.

Build and run from the repository root:

    cargo build --release -p cspf-py --features extension-module
    python3 python/smoke_test.py

The script looks for target/release/libcspf.so (or the macOS/Windows
equivalents) when `cspf` is not already importable.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_cspf():
    try:
        import cspf  # noqa: F401

        return cspf
    except ImportError:
        pass
    for name in ("libcspf.so", "libcspf.dylib", "cspf.dll"):
        path = ROOT / "target" / "release" / name
        if path.exists():
            loader = importlib.machinery.ExtensionFileLoader("cspf", str(path))
            spec = importlib.util.spec_from_file_location("cspf", path, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            sys.modules["cspf"] = module
            return module
    sys.exit("cspf not importable; build with: cargo build --release -p cspf-py --features extension-module")


def main():
    cspf = load_cspf()

    params = cspf.Params()
    gx, bx, gy, by = params.shape_at(20.0)
    assert abs(gx - 11.79834) < 1e-3 and abs(bx - 3.036598) < 1e-3, (gx, bx)
    assert params.gamma_y == 1.431 and params.beta_y == 4.9956
    assert cspf.Params.from_json(params.to_json()).to_json() == params.to_json()

    r = cspf.vehicle_risk(gx, 0.0, 20.0)
    assert abs(r - math.exp(-1)) < 1e-12, r

    t_m, d_m = cspf.cpa(30.0, 0.0, -5.0, 0.0)
    assert abs(t_m - 6.0) < 1e-12 and d_m == 0.0
    assert cspf.cpa(30.0, 0.0, 5.0, 0.0) == (math.inf, math.inf)
    assert abs(cspf.aggregate([0.5, 0.5]) - 0.75) < 1e-12

    ego = cspf.VehicleState(1, 0.0, 0.0, 30.0)
    lead = cspf.VehicleState(2, 24.0, 0.0, 25.0)
    ttc = cspf.ttc(ego, lead)
    # edge gap 24 - 4.5 = 19.5 m closing at 5 m/s
    assert abs(ttc - 3.9) <= 0.01 + 1e-9, ttc
    assert cspf.objective_risk(ego, lead) > 0.0
    assert cspf.ttc(lead, cspf.VehicleState(3, 0.0, 0.0, 20.0)) is None

    xs, ys, rows = cspf.rasterize("s", 20.0, extent=(20.0, 4.0), res=0.5)
    assert len(rows) == len(ys) and len(rows[0]) == len(xs)
    assert rows[len(ys) // 2][len(xs) // 2] == 1.0
    try:
        cspf.rasterize("o", 20.0)
    except ValueError:
        pass
    else:
        raise AssertionError("O-field raster without another vehicle should fail")

    spec = (ROOT / "fixtures" / "stop_and_go.json").read_text()
    ds = cspf.Dataset.synthesize(spec, seed=0)
    assert ds.vehicle_ids() == [1, 2]
    no_lanes = params.without_lane_terms()
    tl = ds.timeline(2, no_lanes)
    assert len(tl["frame"]) == 1000
    assert max(tl["o_risk"]) > 0.7
    braking = ds.behavior_response("o", "longitudinal", [0.3, 0.5, 0.7], no_lanes)
    assert all(d["mean"] < 0 for d in braking), braking

    with tempfile.TemporaryDirectory() as tmp:
        ds.write(pathlib.Path(tmp))
        back = cspf.Dataset.load_directory(tmp)
        assert len(back) == 1 and back[0].vehicle_ids() == [1, 2]
        path = pathlib.Path(tmp) / "p.json"
        params.save(str(path))
        assert json.loads(path.read_text())["o_field"]["t_star"] == 7.5

    print("cspf smoke test ok")


if __name__ == "__main__":
    main()
