"""Acceptance suite: one test per criterion, each printing a pass line.

Quantitative criteria run the full pipeline on synthetic cases with analytic
ground truth; property criteria check the probabilistic and numerical
primitives against brute-force oracles.
"""

import struct
import time

import numpy as np
import pytest

from smokeflow.cli import main as cli_main
from smokeflow.dense_interp import InterpParams, interpolate
from smokeflow.estimator import SkeletalFlowEstimator
from smokeflow.flowio import MAGIC, read_flo, write_flo
from smokeflow.imaging import gradient, threshold_mask, write_png
from smokeflow.metrics import endpoint_error, interpolation_error
from smokeflow.refine import RefineParams, energy, refine
from smokeflow.skeleton import build_skeleton, detect_ridges
from smokeflow.sparse_flow import AttractionParams, attraction_weights, estimate_sparse
from smokeflow.synth import FlowSpec, advect, make_density

from test_dense_interp import dense_oracle, make_sparse, random_sparse
from test_imaging import brute_force_gradient
from test_skeleton import brute_force_ridges


def _report(criterion, detail):
    print(f"[PASS] criterion {criterion}: {detail}")


# vortex with a 6 px maximum displacement: peak of r * angle(r) sits at r = R
VORTEX_6PX = FlowSpec(kind="vortex", strength=6.0 / (60.0 * np.exp(-0.5)), radius=60.0)


@pytest.fixture(scope="module")
def translation_runs():
    """Criterion 3 cases: full pipeline and noEF on two 256x256 translations."""
    runs = []
    for tx, ty, seed in ((3.0, 0.0, 3), (0.0, -4.0, 11)):
        density = make_density(256, 256, seed=seed, blobs=5)
        case = advect(density, FlowSpec(kind="translate", tx=tx, ty=ty))
        t0 = time.perf_counter()
        full = SkeletalFlowEstimator().fit().predict(case.f1, case.f2)
        elapsed = time.perf_counter() - t0
        noef = SkeletalFlowEstimator(refine=False).fit().predict(case.f1, case.f2)
        runs.append(((tx, ty), case, full, noef, elapsed))
    return runs


@pytest.fixture(scope="module")
def refinement_suite():
    """Criterion 5/6 suite: ten synthetic cases with interpolated and refined flows."""
    specs = [
        (1, FlowSpec(kind="translate", tx=2.0, ty=0.0)),
        (2, FlowSpec(kind="translate", tx=-1.5, ty=1.0)),
        (3, FlowSpec(kind="translate", tx=0.0, ty=3.0)),
        (4, FlowSpec(kind="rotate", angle=np.deg2rad(2.5))),
        (5, FlowSpec(kind="rotate", angle=np.deg2rad(-3.0))),
        (6, FlowSpec(kind="vortex", strength=0.12, radius=50.0)),
        (7, FlowSpec(kind="vortex", strength=-0.10, radius=70.0)),
        (8, FlowSpec(kind="shear", rate=0.02)),
        (9, FlowSpec(kind="translate", tx=2.0, ty=-1.0, diffusion=0.5)),
        (10, FlowSpec(kind="rotate", angle=np.deg2rad(2.0), diffusion=0.5)),
    ]
    params = RefineParams()
    suite = []
    for seed, spec in specs:
        case = advect(make_density(192, 192, seed=seed, blobs=5), spec)
        sk1 = build_skeleton(case.f1, threshold_mask(case.f1))
        sk2 = build_skeleton(case.f2, threshold_mask(case.f2))
        flow0 = interpolate(estimate_sparse(sk1, sk2))
        flow1 = refine(case.f1, case.f2, flow0, params)
        suite.append((case, flow0, flow1, params))
    return suite


def test_criterion_01_dct_solver_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    n_instances = 21
    for k in range(n_instances):
        lam = (0.1, 1.0, 10.0)[k % 3]
        sparse = random_sparse((8, 8), rng)
        flow = interpolate(sparse, params=InterpParams(lam=lam, tol=1e-9, max_iters=20000))
        for comp in (0, 1):
            diff = np.abs(flow[..., comp] - dense_oracle(sparse, lam, comp)).max()
            worst = max(worst, diff)
            assert diff < 1e-5
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    _report(1, f"{n_instances} random 8x8 instances, max |dct - dense| = {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_probability_sanity():
    rng = np.random.default_rng(7)
    params = AttractionParams(sigma_spatial=6.0, min_weight=0.0)
    checked = 0
    for _ in range(1000):
        m = int(rng.integers(1, 10))
        pos = rng.uniform(-12.0, 12.0, (m, 2))
        stabs = rng.choice([0.2, 0.4, 0.6, 0.8, 1.0], m)
        ang = rng.uniform(0, np.pi, m)
        tangents = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        normals = np.stack([-np.sin(ang), np.cos(ang)], axis=1)
        anchor = rng.uniform(-3.0, 3.0, 2)
        p = attraction_weights(anchor, 0.6, pos, stabs, tangents, normals, params)
        assert abs(p.sum() - 1.0) <= 1e-9
        assert (p >= 0.0).all()
        dest = (pos * p[:, None]).sum(axis=0)
        assert pos[:, 0].min() - 1e-9 <= dest[0] <= pos[:, 0].max() + 1e-9
        assert pos[:, 1].min() - 1e-9 <= dest[1] <= pos[:, 1].max() + 1e-9
        checked += 1
    # symmetric two-candidate configurations resolve to exactly one half
    for k in range(100):
        off = rng.uniform(0.5, 8.0, 2)
        pos = np.stack([off, -off])
        ang = rng.uniform(0, np.pi)
        tangents = np.tile([np.cos(ang), np.sin(ang)], (2, 1))
        normals = np.tile([-np.sin(ang), np.cos(ang)], (2, 1))
        p = attraction_weights((0.0, 0.0), 0.4, pos, [0.4, 0.4], tangents, normals, params)
        assert abs(p[0] - 0.5) <= 1e-12 and abs(p[1] - 0.5) <= 1e-12
    _report(2, f"{checked} random configurations + 100 symmetric pairs")


def test_criterion_03_translation_recovery(translation_runs):
    details = []
    for (tx, ty), case, full, noef, elapsed in translation_runs:
        ee_full, _ = endpoint_error(full, case.gt)
        ee_noef, _ = endpoint_error(noef, case.gt)
        assert ee_full < 1.0, f"translate({tx},{ty}): EE {ee_full:.3f}"
        assert ee_full <= ee_noef + 0.1, "refinement made EE worse"
        assert elapsed < 30.0
        details.append(f"({tx:g},{ty:g}) EE {ee_full:.3f} (noEF {ee_noef:.3f}) {elapsed:.1f}s")
    _report(3, "; ".join(details))


def test_criterion_04_rotation_vortex_recovery():
    details = []
    for name, spec in (("rotate4deg", FlowSpec(kind="rotate", angle=np.deg2rad(4.0))),
                       ("vortex6px", VORTEX_6PX)):
        case = advect(make_density(256, 256, seed=9, blobs=5), spec)
        assert np.hypot(case.gt[..., 0], case.gt[..., 1]).max() <= 12.7
        if spec.kind == "vortex":
            assert np.hypot(case.gt[..., 0], case.gt[..., 1]).max() <= 6.0 + 1e-9
        mask = threshold_mask(case.f1)
        flow = SkeletalFlowEstimator().fit().predict(case.f1, case.f2)
        ee_mask, _ = endpoint_error(flow, case.gt, mask)
        assert ee_mask < 1.5, f"{name}: masked EE {ee_mask:.3f}"
        details.append(f"{name} EE(mask) {ee_mask:.3f}")
    _report(4, "; ".join(details))


def test_criterion_05_refinement_monotonicity(refinement_suite):
    improved = 0
    for case, flow0, flow1, params in refinement_suite:
        e0 = energy(case.f1, case.f2, flow0, params)
        e1 = energy(case.f1, case.f2, flow1, params)
        assert e1 <= e0 + 1e-9, "refinement increased the energy"
        ie0 = interpolation_error(case.f1, case.f2, flow0)
        ie1 = interpolation_error(case.f1, case.f2, flow1)
        improved += ie1 <= ie0 + 0.005
    assert improved >= 8, f"IE held in only {improved}/10 cases"
    _report(5, f"energy monotone 10/10, IE held or improved {improved}/10")


def test_criterion_06_interpolation_error_protocol(refinement_suite):
    checked = 0
    for case, _, _, _ in refinement_suite:
        mean_motion = np.hypot(case.gt[..., 0], case.gt[..., 1]).mean()
        if mean_motion <= 1.0:
            continue
        ie_gt = interpolation_error(case.f1, case.f2, case.gt)
        ie_zero = interpolation_error(case.f1, case.f2, np.zeros_like(case.gt))
        assert ie_gt < ie_zero, f"IE(gt) {ie_gt:.4f} !< IE(0) {ie_zero:.4f}"
        checked += 1
    assert checked >= 5
    _report(6, f"IE(gt) < IE(zero) on all {checked} cases with mean motion > 1 px")


def test_criterion_07_tensor_variant_regression():
    rng = np.random.default_rng(77)
    c = np.array([2.0, -1.25])
    base = random_sparse((16, 16), rng, n_lo=8, n_hi=20)
    sparse = make_sparse((16, 16), base.anchors, np.tile(c, (len(base), 1)))
    garcia = interpolate(sparse, params=InterpParams(lam=1.0, tol=1e-10, max_iters=50000))
    dev = max(np.abs(garcia[..., 0] - c[0]).max(), np.abs(garcia[..., 1] - c[1]).max())
    assert dev < 1e-6, f"garcia deviated from the constant by {dev:.2e}"
    literal = interpolate(
        sparse,
        params=InterpParams(lam=1.0, tol=1e-10, max_iters=50000, tensor_variant="paper_literal"),
    )
    shrunk = np.hypot(literal[..., 0], literal[..., 1]).max()
    assert shrunk < np.hypot(*c)
    _report(7, f"garcia constant dev {dev:.1e}; paper_literal max |v| {shrunk:.3f} < {np.hypot(*c):.3f}")


def test_criterion_08_flo_format_fidelity(tmp_path):
    rng = np.random.default_rng(88)
    for k in range(100):
        h, w = int(rng.integers(1, 20)), int(rng.integers(1, 20))
        flow = rng.normal(0, 50, (h, w, 2)).astype(np.float32)
        path = tmp_path / f"r{k}.flo"
        write_flo(flow, path)
        np.testing.assert_array_equal(read_flo(path), flow)
    one = tmp_path / "one.flo"
    write_flo(np.zeros((1, 1, 2), dtype=np.float32), one)
    data = one.read_bytes()
    assert len(data) == 20 and data[:4] == MAGIC
    assert struct.unpack("<ii", data[4:12]) == (1, 1)
    _report(8, "100 random roundtrips bit-exact; 1x1 file is 20 bytes with PIEH magic")


def test_criterion_09_estimate_determinism(tmp_path):
    density = make_density(96, 96, seed=4)
    case = advect(density, FlowSpec(kind="translate", tx=2.0, ty=1.0))
    write_png(case.f1, tmp_path / "f1.png")
    write_png(case.f2, tmp_path / "f2.png")
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / f"{run}.flo"
        code = cli_main([
            "estimate", "--frame1", str(tmp_path / "f1.png"), "--frame2", str(tmp_path / "f2.png"),
            "--out", str(out), "--report", str(tmp_path / f"{run}.json"),
        ])
        assert code == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
    _report(9, f"two runs produced bit-identical .flo files ({len(blobs[0])} bytes)")


def test_criterion_10_ridge_gradient_oracles():
    rng = np.random.default_rng(1010)
    for k in range(50):
        h, w = int(rng.integers(2, 10)), int(rng.integers(2, 10))
        f = rng.uniform(0, 1, (h, w))
        mask = rng.uniform(0, 1, (h, w)) > 0.25
        np.testing.assert_array_equal(detect_ridges(f, mask), brute_force_ridges(f, mask))
        gx, gy = gradient(f)
        ox, oy = brute_force_gradient(f)
        np.testing.assert_array_equal(gx, ox)
        np.testing.assert_array_equal(gy, oy)
    _report(10, "detect_ridges and gradient matched brute force exactly on 50 frames")
