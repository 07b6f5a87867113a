"""Smoke test for the `sld` extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/sld-*.whl
"""

import json
import math
import pathlib

import sld

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    tool = (ROOT / "data" / "tools" / "endmill_12mm_2f.json").read_text()
    fem = sld.tool_modes(tool, n_modes=1)
    assert len(fem) == 2 and fem[0].natural_frequency == fem[1].natural_frequency
    print("tool modes:", fem)

    axx, axy, ayx, ayy = sld.directional_factors(0.0, math.pi, 0.3)
    assert abs(axx + 0.3 * math.pi) < 1e-12 and abs(ayx - math.pi) < 1e-12

    modes = [sld.Mode(800.0, 0.02, 2e7, "X"), sld.Mode(800.0, 0.02, 2e7, "Y")]
    lobes = sld.stability_lobes(modes, 600.0, 0.3, 2, 400.0, 1200.0)
    speeds, depths = lobes.envelope
    print(f"{len(lobes.lobes)} lobes, envelope minimum {min(depths):.3f} mm")
    n = 12000.0
    a = lobes.depth_at(n)
    assert lobes.classify(n, 0.5 * a) == "stable"
    assert lobes.classify(n, 2.0 * a) == "unstable"
    assert sld.fdm_spectral_radius(modes, 600.0, 0.3, 2, n, 0.5 * a) < 1.0

    job = sld.run_job_file(str(ROOT / "data" / "canonical_job.json"))
    nominal, low, high = job.band
    assert all(lo <= nom <= hi for lo, nom, hi in zip(low, nominal, high))
    verdict = job.classify(11500.0, 0.05)
    assert verdict.region == "unconditionally_stable" and verdict.p_stable == 1.0
    print("verdict:", verdict)
    doc = json.loads(job.to_json())
    assert doc["metadata"]["dynamics_source"] == "ema"
    assert job.to_csv().startswith("speed_rpm,a_nominal_mm,a_low_mm,a_high_mm\n")
    assert job.to_svg().count('<g class="region ') == 3

    try:
        sld.run_job(json.dumps({"modes": "modes.json", "material": "AISI 1045", "cut": {"milling_mode": "slot"}}))
    except ValueError as e:
        print("rejected file reference:", e)
    else:
        raise AssertionError("file reference accepted")

    print("ok")


if __name__ == "__main__":
    main()
