"""Smoke test for the rydgate Python extension.

Build and install first:
    cd crates/py && maturin build --release -o dist && pip install dist/rydgate-*.whl
"""

import math

import rydgate


def main():
    p = rydgate.PhysicalParams(omega_mhz=4.0, v_mhz=500.0, duration_ns=500.0)
    assert abs(p.omega_mhz - 4.0) < 1e-12
    assert not p.soft_blockade

    gate = rydgate.run_gate("ncgc", p)
    assert gate["fidelity"] >= 0.9999, gate["fidelity"]
    for key in ("phi_01", "phi_10", "phi_11"):
        assert abs(abs(gate[key]) - math.pi) < 1e-2, (key, gate[key])
    print(f"ncgc fidelity {gate['fidelity']:.10f}")

    wave = rydgate.waveform("pm", p, samples=11)  # 11 intervals, both endpoints included
    assert len(wave) == 12 and wave[0][0] == 0.0 and wave[-1][0] == 500.0

    sweep = rydgate.systematic_sweep([-0.1, 0.1])
    by = {(pt["protocol"], pt["coords"][0]): pt["mean"] for pt in sweep["points"]}
    for k in (-0.1, 0.1):
        assert by[("ncgc", k)] > by[("pm", k)] > by[("rm", k)]
    print("kappa1=+0.1:", {name: round(by[(name, 0.1)], 6) for name in ("ncgc", "pm", "rm")})

    mc = rydgate.noise_monte_carlo([0.0, 0.1], [0.0], trials=3, seed=5)
    again = rydgate.noise_monte_carlo([0.0, 0.1], [0.0], trials=3, seed=5)
    assert mc == again

    qft = rydgate.qft_timing(8)
    assert qft["t_total_cyclic"] == 8 * 250 + 750 * 28
    assert qft["t_total_ncgc"] < qft["t_total_cyclic"]

    try:
        rydgate.run_gate("bogus")
    except rydgate.RydgateError as e:
        print("rejected:", e)
    else:
        raise AssertionError("unknown protocol accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
