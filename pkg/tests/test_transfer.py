import math

import numpy as np
import pytest

from cocyclib.cocycle import (
    LocallyConstantCocycle,
    coboundary_conjugate,
    evaluate,
)
from cocyclib.fixtures import (
    mild_random_cocycle,
    peel_fixture,
    rotation,
    unipotent_example,
)
from cocyclib.measure import sample_point
from cocyclib.sft import MetricParams, fixed_point
from cocyclib.transfer import (
    StageError,
    TransferEvaluator,
    conjugacy_residual,
    default_basepoints,
    holder_estimate,
    materialize,
    minimize_table,
    periodic_consistency_solve,
    superdiagonal_peel,
    two_block_recover,
    verify_conjugacy,
)
from cocyclib.zimmer import ZimmerDescriptor, membership

DESC2 = ZimmerDescriptor((1, 1), 0.0)
DESC4 = ZimmerDescriptor((1, 1, 1, 1), 0.0)


def _points(mu, rng, count, length=12):
    return [sample_point(mu, rng, length) for _ in range(count)]


def test_propagate_at_basepoints(q2, mu2, rng):
    a = mild_random_cocycle(q2, 1, seed=3)
    bps = default_basepoints(q2)
    seeds = tuple(rotation(0.3 * i + 0.1) for i in range(2))
    ev = TransferEvaluator(a, a, bps, seeds)
    for i, w in enumerate(bps):
        np.testing.assert_allclose(ev.evaluate(w), seeds[i], atol=1e-13)


def test_propagate_identity_when_cocycles_equal(q2, mu2, rng):
    # A = B with identity seeds: holonomies cancel leg by leg
    a = mild_random_cocycle(q2, 1, seed=4)
    bps = default_basepoints(q2)
    ev = TransferEvaluator(a, a, bps, (np.eye(2), np.eye(2)))
    for x in _points(mu2, rng, 20):
        np.testing.assert_allclose(ev.evaluate(x), np.eye(2), atol=1e-12)
        np.testing.assert_allclose(ev.evaluate(x, "su"), np.eye(2),
                                   atol=1e-12)


def test_propagate_recovers_unipotent_frame(q2, mu2, rng):
    # the worked example: seeds from the frame, propagation reproduces it
    ex = unipotent_example(q2)
    bps = default_basepoints(q2)
    seeds = tuple(evaluate(ex.frame, w) for w in bps)
    ev = TransferEvaluator(ex.a, ex.b, bps, seeds)
    worst = 0.0
    for x in _points(mu2, rng, 200, length=10):
        worst = max(worst, conjugacy_residual(ex.a, ex.b, ev, x))
        np.testing.assert_allclose(ev.evaluate(x), evaluate(ex.frame, x),
                                   atol=1e-12)
    assert worst <= 1e-10


def test_two_block_recover_zero_corner(q2, mu2, rng):
    a = peel_fixture(seed=31, dims=(1, 1), conjugator_window=0).base
    ev = two_block_recover(a, a, DESC2, [np.zeros((1, 1)), np.zeros((1, 1))])
    for x in _points(mu2, rng, 15):
        np.testing.assert_allclose(ev.evaluate(x), np.zeros((1, 1)),
                                   atol=1e-12)


def test_two_block_recover_unipotent_phi(q2, mu2, rng):
    # 1x1 diagonal blocks with trivial holonomies: the corner is phi(x) = x_0
    ex = unipotent_example(q2)
    bps = default_basepoints(q2)
    seeds = [np.array([[float(w[0])]]) for w in bps]
    ev = two_block_recover(ex.b, ex.a, DESC2, seeds)
    for x in _points(mu2, rng, 50, length=8):
        np.testing.assert_allclose(ev.evaluate(x), [[float(x[0])]],
                                    atol=1e-13)
        np.testing.assert_allclose(ev.evaluate(x, "su"), [[float(x[0])]],
                                    atol=1e-13)


def test_two_block_recover_rejects_mismatched_diagonals(q2):
    a = peel_fixture(seed=33, dims=(1, 1), conjugator_window=0).base
    b = peel_fixture(seed=34, dims=(1, 1), conjugator_window=0).base
    with pytest.raises(ValueError, match="diagonal"):
        two_block_recover(a, b, DESC2, [np.zeros((1, 1)), np.zeros((1, 1))])


def test_two_block_recover_membership_gate(q2):
    bad = LocallyConstantCocycle.constant(q2, np.diag([2.0, 0.5]))
    with pytest.raises(ValueError, match="membership"):
        two_block_recover(bad, bad, DESC2, [np.zeros((1, 1))] * 2)


def test_peel_identity_when_equal(q2, mu2, rng):
    fix = peel_fixture(seed=41, dims=(1, 1, 1, 1), conjugator_window=0)
    a = fix.base
    ev = superdiagonal_peel(a, a, DESC4, [np.eye(4), np.eye(4)])
    assert ev.stages == []  # every stage is the identity and is dropped
    for x in _points(mu2, rng, 10):
        np.testing.assert_allclose(ev.evaluate(x), np.eye(4), atol=1e-12)


@pytest.mark.parametrize("dims,desc,window", [((1, 1), DESC2, 0),
                                              ((1, 1), DESC2, 1),
                                              ((1, 1, 1, 1), DESC4, 1)])
def test_peel_roundtrip(q2, mu2, rng, dims, desc, window):
    fix = peel_fixture(seed=101 + len(dims) + window, dims=dims,
                       conjugator_window=window)
    a, u, b = fix.base, fix.conjugator, fix.result
    bps = default_basepoints(q2)
    seeds = [np.linalg.inv(evaluate(u, w)) for w in bps]
    ev = superdiagonal_peel(a, b, desc, seeds)
    pts = _points(mu2, rng, 300)
    worst = max(conjugacy_residual(a, b, ev, x) for x in pts)
    assert worst <= 1e-8
    path = max(float(np.max(np.abs(ev.evaluate(x, "us") - ev.evaluate(x, "su"))))
               for x in pts[:50])
    assert path <= 1e-9
    # recovered values stay in the block structure and have orthogonal
    # diagonal blocks
    for x in pts[:50]:
        value = ev.evaluate(x)
        assert membership(value, desc, 1e-9).ok
    report = verify_conjugacy(a, b, ev, pts, tol=1e-8)
    assert report.passed


def test_peel_two_block_reduces_to_corner_recovery(q2, mu2, rng):
    # on a 2-block pair the peel's single offset stage is exactly the
    # two-block corner recovery
    fix = peel_fixture(seed=88, dims=(1, 1), conjugator_window=1)
    a, u, b = fix.base, fix.conjugator, fix.result
    seeds = [np.linalg.inv(evaluate(u, w)) for w in default_basepoints(q2)]
    ev = superdiagonal_peel(a, b, DESC2, seeds)
    corner_seeds = [s[:1, 1:] for s in seeds]
    corner_ev = two_block_recover(a, b, DESC2, corner_seeds)
    for x in _points(mu2, rng, 40):
        full = ev.evaluate(x)
        np.testing.assert_allclose(full[:1, 1:], corner_ev.evaluate(x),
                                   atol=1e-12)
        np.testing.assert_allclose(np.diag(full), np.ones(2), atol=1e-12)


def test_peel_matches_known_transfer_pointwise(q2, mu2, rng):
    # for these fixtures the propagated transfer coincides with u^{-1}
    fix = peel_fixture(seed=77, dims=(1, 1), conjugator_window=1)
    a, u, b = fix.base, fix.conjugator, fix.result
    seeds = [np.linalg.inv(evaluate(u, w)) for w in default_basepoints(q2)]
    ev = superdiagonal_peel(a, b, DESC2, seeds)
    for x in _points(mu2, rng, 40):
        np.testing.assert_allclose(ev.evaluate(x),
                                   np.linalg.inv(evaluate(u, x)), atol=1e-11)


def test_peel_corrupted_seed_fails_loudly(q2, mu2, rng):
    fix = peel_fixture(seed=55, dims=(1, 1), conjugator_window=1)
    a, u, b = fix.base, fix.conjugator, fix.result
    bps = default_basepoints(q2)
    seeds = [np.linalg.inv(evaluate(u, w)) for w in bps]
    seeds[0] = seeds[0] + np.array([[0.0, 0.5], [0.0, 0.0]])
    try:
        ev = superdiagonal_peel(a, b, DESC2, seeds)
        pts = _points(mu2, rng, 100)
        report = verify_conjugacy(a, b, ev, pts, tol=1e-8)
        assert not report.passed
        assert report.max_residual > 1e-3
    except StageError as exc:
        assert exc.residual > 1e-8


def test_stage_error_is_tagged(q2):
    # mangled seeds abort with a stage-tagged residual diagnostic
    fix = peel_fixture(seed=56, dims=(1, 1), conjugator_window=1)
    a, u, b = fix.base, fix.conjugator, fix.result
    bad_seeds = [np.eye(2) + 0.4 * np.triu(np.ones((2, 2)), 1)] * 2
    with pytest.raises(StageError) as err:
        superdiagonal_peel(a, b, DESC2, bad_seeds, tol=1e-10)
    assert err.value.stage == "offset-1"
    assert err.value.residual > 1e-10


def test_verify_conjugacy_reports(q2, mu2, rng):
    a = mild_random_cocycle(q2, 0, seed=8)
    ident = TransferEvaluator(a, a, default_basepoints(q2),
                              (np.eye(2), np.eye(2)))
    pts = _points(mu2, rng, 60)
    report = verify_conjugacy(a, a, ident, pts, tol=1e-12)
    assert report.passed and report.max_residual <= 1e-13
    assert report.convention == "A(x) = C(shift x) B(x) C(x)^{-1}"
    with pytest.raises(ValueError, match="nonempty"):
        verify_conjugacy(a, a, ident, [], tol=1e-12)


def test_holder_estimate_sentinel_and_positive(q2, mu2, rng):
    # constant-per-symbol evaluator: differences vanish below the cutoff
    ex = unipotent_example(q2)
    bps = default_basepoints(q2)
    ev = TransferEvaluator(ex.a, ex.b, bps,
                           tuple(evaluate(ex.frame, w) for w in bps))
    pts = _points(mu2, rng, 300, length=10)
    pairs = list(zip(pts, pts[1:]))
    alpha, _ = holder_estimate(ev, pairs)
    assert math.isinf(alpha)

    # graded evaluator built from window-k holonomies: finite positive slope
    from cocyclib.fixtures import graded_rotation_cocycle

    g = graded_rotation_cocycle(q2, window=5, decay=0.5, seed=6)
    gb = coboundary_conjugate(g, mild_random_cocycle(q2, 0, seed=12))
    seeds = tuple(np.eye(2) for _ in bps)

    def graded_eval(x):
        # transfer-like quantity with graded dependence: the holonomy of g
        from cocyclib.holonomy import stable_holonomy
        from cocyclib.sft import bracket
        w = bps[x[0]]
        return stable_holonomy(g, w, bracket(x, w)).matrix

    alpha2, c2 = holder_estimate(graded_eval, pairs, cutoff=1.0)
    assert 0.1 < alpha2 < 5.0 and c2 > 0


def test_holder_estimate_tau_rescaling(q2, mu2, rng):
    from cocyclib.holonomy import stable_holonomy
    from cocyclib.sft import bracket

    g = mild_random_cocycle(q2, 3, seed=13)
    bps = default_basepoints(q2)

    def ev(x):
        w = bps[x[0]]
        return stable_holonomy(g, w, bracket(x, w)).matrix

    pts = _points(mu2, rng, 400, length=14)
    pairs = list(zip(pts, pts[1:]))
    a1, _ = holder_estimate(ev, pairs, metric=MetricParams(1.0), cutoff=1.0)
    a2, _ = holder_estimate(ev, pairs, metric=MetricParams(2.0), cutoff=1.0)
    assert a1 == pytest.approx(2.0 * a2, rel=1e-9)


def test_periodic_consistency_identity_case(q2):
    a = mild_random_cocycle(q2, 0, seed=21)
    p = fixed_point(q2, 0)
    sol = periodic_consistency_solve(a, a, p)
    assert sol.has_invertible
    # the identity lies in the solution span
    coeffs, *_ = np.linalg.lstsq(
        np.column_stack([m.reshape(-1) for m in sol.basis]),
        np.eye(a.dimension).reshape(-1), rcond=None)
    recon = sum(c * m for c, m in zip(coeffs, sol.basis))
    np.testing.assert_allclose(recon, np.eye(a.dimension), atol=1e-10)


def test_periodic_consistency_jordan_obstruction(q2):
    # diagonalizable vs Jordan-type return maps: no invertible intertwiner
    a = LocallyConstantCocycle.constant(q2, np.diag([2.0, 0.5]))
    b = LocallyConstantCocycle.constant(q2, np.array([[2.0, 1.0], [0.0, 2.0]]))
    sol = periodic_consistency_solve(a, b, fixed_point(q2, 0))
    assert not sol.has_invertible


def test_periodic_consistency_commuting_centralizer(q2):
    # A = B constant diagonal with distinct entries: solution space is the
    # centralizer (diagonal matrices), dimension 2
    a = LocallyConstantCocycle.constant(q2, np.diag([2.0, 0.5]))
    sol = periodic_consistency_solve(a, a, fixed_point(q2, 0))
    assert len(sol.basis) == 2
    for m in sol.basis:
        assert abs(m[0, 1]) <= 1e-10 and abs(m[1, 0]) <= 1e-10


def test_materialize_and_minimize(q2):
    a = mild_random_cocycle(q2, 0, seed=3)
    table = materialize(q2, lambda x: evaluate(a, x), 2, 2)
    assert table.window_radius == 2
    small = minimize_table(table)
    assert small.window_radius == 0
    for w, m in a.table.items():
        np.testing.assert_array_equal(small.table[w], m)


def test_evaluator_serialization_roundtrip(q2, mu2, rng):
    fix = peel_fixture(seed=61, dims=(1, 1), conjugator_window=1)
    a, u, b = fix.base, fix.conjugator, fix.result
    seeds = [np.linalg.inv(evaluate(u, w)) for w in default_basepoints(q2)]
    ev = superdiagonal_peel(a, b, DESC2, seeds)
    blob = ev.to_jsonable()
    assert blob["rule"] == "superdiagonal-peel"
    # rebuild the evaluator from the serialized stage tables
    rebuilt = []
    for entry in blob["stage_tables"]:
        table = {tuple(int(s) for s in key.split()): np.array(mat)
                 for key, mat in entry["table"].items()}
        rebuilt.append(LocallyConstantCocycle(q2, entry["window_radius"],
                                              a.dimension, table))
    for x in _points(mu2, rng, 30):
        value = np.eye(a.dimension)
        for t in rebuilt:
            k = t.window_radius
            value = t.table[x.window(-k, k)] @ value
        np.testing.assert_allclose(value, ev.evaluate(x), atol=1e-13)


def test_plain_evaluator_serialization(q2):
    ex = unipotent_example(q2)
    bps = default_basepoints(q2)
    ev = TransferEvaluator(ex.a, ex.b, bps,
                           tuple(evaluate(ex.frame, w) for w in bps))
    blob = ev.to_jsonable()
    assert blob["rule"] == "holonomy-two-leg"
    assert len(blob["basepoints"]) == 2 and len(blob["base_values"]) == 2
    assert set(blob["cocycles"]) == {"a", "b"}


def test_peel_with_nontrivial_diagonal_blocks(q2, mu2, rng):
    # the conjugacy has non-identity orthogonal diagonal blocks, so the
    # diagonal stage genuinely recovers them before the corner offsets
    from cocyclib.fixtures import sign_diagonal_cocycle

    gen = np.random.default_rng(5)

    def u_builder(w):
        d0 = -1.0 if gen.random() < 0.5 else 1.0
        d1 = -1.0 if gen.random() < 0.5 else 1.0
        return np.array([[d0, gen.uniform(-0.7, 0.7)], [0.0, d1]])

    u = LocallyConstantCocycle.from_function(q2, 1, u_builder)
    a = sign_diagonal_cocycle(q2, 2, gen)
    b = coboundary_conjugate(a, u)
    seeds = [np.linalg.inv(evaluate(u, w)) for w in default_basepoints(q2)]
    ev = superdiagonal_peel(a, b, DESC2, seeds)
    assert "diagonal" in ev.stage_names
    pts = _points(mu2, rng, 200)
    assert max(conjugacy_residual(a, b, ev, x) for x in pts) <= 1e-12
    for x in pts[:40]:
        np.testing.assert_allclose(ev.evaluate(x),
                                   np.linalg.inv(evaluate(u, x)), atol=1e-12)


def test_peel_mixed_block_dimensions(q2, mu2, rng):
    # dims (1, 2, 1): rectangular corners and a 2x2 orthogonal middle block
    from cocyclib.fixtures import sign_diagonal_cocycle
    from cocyclib.zimmer import haar_orthogonal

    gen = np.random.default_rng(6)
    desc = ZimmerDescriptor((1, 2, 1), 0.0)

    def u_builder(w):
        m = np.eye(4)
        m[0, 0] = -1.0 if gen.random() < 0.5 else 1.0
        m[1:3, 1:3] = haar_orthogonal(gen, 2)
        m[3, 3] = -1.0 if gen.random() < 0.5 else 1.0
        m[0, 1:] = gen.uniform(-0.5, 0.5, 3)
        m[1:3, 3] = gen.uniform(-0.5, 0.5, 2)
        return m

    u = LocallyConstantCocycle.from_function(q2, 1, u_builder)
    a = sign_diagonal_cocycle(q2, 4, gen)
    b = coboundary_conjugate(a, u)
    seeds = [np.linalg.inv(evaluate(u, w)) for w in default_basepoints(q2)]
    ev = superdiagonal_peel(a, b, desc, seeds)
    pts = _points(mu2, rng, 150)
    assert max(conjugacy_residual(a, b, ev, x) for x in pts) <= 1e-12
    gap = max(float(np.max(np.abs(ev.evaluate(x, "us") - ev.evaluate(x, "su"))))
              for x in pts[:30])
    assert gap <= 1e-12


def test_peel_on_constrained_and_multi_symbol_shifts(rng):
    # golden mean (forbidden word) and a 3-symbol shift with a constrained
    # matrix both run the full pipeline exactly
    from cocyclib.fixtures import sign_diagonal_cocycle, unipotent_layer_conjugator
    from cocyclib.measure import MarkovMeasure, golden_mean_markov
    from cocyclib.sft import TransitionMatrix, golden_mean_shift

    cases = []
    g = golden_mean_shift()
    cases.append((g, golden_mean_markov(), (1, 2)))
    q3 = TransitionMatrix.from_rows([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    mu3 = MarkovMeasure.from_matrix(
        np.array([[0.5, 0.5, 0.0], [0.0, 0.4, 0.6], [0.7, 0.0, 0.3]]))
    cases.append((q3, mu3, (1, 1)))
    for q, mu, dims in cases:
        gen = np.random.default_rng(14)
        a = sign_diagonal_cocycle(q, sum(dims), gen)
        u = unipotent_layer_conjugator(q, dims, gen, 0.5, window=1)
        b = coboundary_conjugate(a, u)
        seeds = [np.linalg.inv(evaluate(u, w)) for w in default_basepoints(q)]
        ev = superdiagonal_peel(a, b, ZimmerDescriptor(dims, 0.0), seeds)
        pts = [sample_point(mu, rng, 14) for _ in range(120)]
        assert max(conjugacy_residual(a, b, ev, x) for x in pts) <= 1e-12
