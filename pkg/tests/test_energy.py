"""Energy models: values, gating, locality, conditional energies, additivity."""

import math

import numpy as np
import pytest

from gibbsgrain import (
    Ball,
    Box,
    Configuration,
    DiffusionModel,
    DiscSystem,
    HardSphereModel,
    IdealModel,
    MarkedPoint,
    PairPotentialModel,
    PreconditionError,
    QuermassModel,
    additivity_check,
    conditional_energy,
    dilate,
    energy,
    euler_characteristic,
    interaction_range,
    lj_pair,
    minimal_t,
    restrict,
    restrict_complement,
    stream,
    union_area,
    union_perimeter,
)
from gibbsgrain.marks import LangevinSpec, PathMark, sample_mark
from conftest import config, mp, random_scalar_config


def soft_bump(u):
    return 1.2 * u * math.exp(-u)


def straight_path(end, k=8):
    pts = np.stack(
        [np.linspace(0.0, end[0], k + 1), np.linspace(0.0, end[1], k + 1)], axis=1
    )
    return PathMark(pts)


def path_point(loc, end, k=8):
    return MarkedPoint.make(loc, straight_path(end, k))


ALL_MODELS = [
    IdealModel(),
    HardSphereModel(),
    PairPotentialModel(soft_bump, phi_id="soft_bump"),
    QuermassModel(0.4, -0.2, 0.3),
]


class TestBasics:
    def test_empty_is_zero_for_every_model(self):
        e2 = Configuration.empty(2)
        for model in ALL_MODELS + [DiffusionModel()]:
            assert energy(model, e2) == 0.0

    def test_values_never_nan(self):
        rng = stream(501, 0)
        for _ in range(25):
            g = random_scalar_config(rng, n_max=8, extent=2.0, mark_hi=1.2)
            for model in ALL_MODELS:
                v = energy(model, g)
                assert not math.isnan(v)


class TestHardSphere:
    model = HardSphereModel()

    def test_overlap_is_infinite(self):
        g = config([mp((0.0, 0.0), 1.0), mp((1.5, 0.0), 1.0)])
        assert energy(self.model, g) == math.inf

    def test_separated_is_zero(self):
        g = config([mp((0.0, 0.0), 1.0), mp((2.5, 0.0), 1.0)])
        assert energy(self.model, g) == 0.0

    def test_contact_is_allowed(self):
        # grains are open balls, touching boundaries do not overlap
        g = config([mp((0.0, 0.0), 1.0), mp((2.0, 0.0), 1.0)])
        assert energy(self.model, g) == 0.0

    def test_zero_radius_never_overlaps(self):
        g = config([mp((0.0, 0.0), 0.0), mp((0.1, 0.0), 5.0)])
        assert energy(self.model, g) == 0.0


class TestPairPotential:
    def test_phi_zero_at_origin_enforced(self):
        with pytest.raises(ValueError):
            PairPotentialModel(lambda u: u + 1.0)

    def test_negative_phi_rejected(self):
        with pytest.raises(ValueError):
            PairPotentialModel(lambda u: -u)

    def test_gate_and_value(self):
        model = PairPotentialModel(soft_bump, phi_id="soft_bump")
        near = config([mp((0.0, 0.0), 0.8), mp((1.0, 0.0), 0.7)])
        assert energy(model, near) == pytest.approx(soft_bump(1.0), rel=1e-12)
        far = config([mp((0.0, 0.0), 0.4), mp((1.0, 0.0), 0.5)])
        assert energy(model, far) == 0.0

    def test_three_point_sum(self):
        model = PairPotentialModel(soft_bump, phi_id="soft_bump")
        g = config([mp((0.0, 0.0), 1.0), mp((1.0, 0.0), 1.0), mp((0.0, 1.5), 1.0)])
        expect = soft_bump(1.0) + soft_bump(1.5) + soft_bump(math.hypot(1.0, 1.5))
        assert energy(model, g) == pytest.approx(expect, rel=1e-12)


class TestQuermass:
    def test_single_disc_area(self):
        model = QuermassModel(1.0, 0.0, 0.0)
        g = config([mp((0.3, 0.4), 1.0)])
        assert energy(model, g) == pytest.approx(math.pi, rel=1e-9)

    def test_matches_geometry_functionals(self):
        rng = stream(502, 0)
        model = QuermassModel(0.7, -0.3, 1.1)
        for _ in range(15):
            g = random_scalar_config(rng, n_max=8, extent=2.0, mark_hi=1.3)
            if len(g.points) == 0:
                continue
            s = DiscSystem.from_configuration(g)
            expect = (
                0.7 * union_area(s)
                - 0.3 * union_perimeter(s)
                + 1.1 * euler_characteristic(s)
            )
            assert energy(model, g) == pytest.approx(expect, rel=1e-12, abs=1e-12)

    def test_dimension_guard(self):
        model = QuermassModel(1.0, 0.0, 0.0)
        g = Configuration([MarkedPoint.make((0.0, 0.0, 0.0), 1.0)])
        with pytest.raises(PreconditionError):
            energy(model, g)


class TestLennardJones:
    def test_zero_crossing(self):
        assert lj_pair(1.5) == 0.0

    def test_global_minimum(self):
        u_star = 1.5 * 2.0 ** (1.0 / 6.0)
        assert abs(lj_pair(u_star) + 4.0) <= 1e-9
        for eps in (-1e-4, 1e-4):
            assert lj_pair(u_star + eps) > lj_pair(u_star)

    def test_decay_from_below(self):
        assert -1e-6 < lj_pair(100.0) < 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            lj_pair(0.0)
        assert lj_pair(1e-300) == math.inf


class TestDiffusion:
    def test_scalar_marks_rejected(self):
        model = DiffusionModel()
        with pytest.raises(PreconditionError):
            energy(model, config([mp((0.0, 0.0), 1.0)]))

    def test_mismatched_grids_rejected(self):
        model = DiffusionModel()
        g = Configuration(
            [path_point((0.0, 0.0), (1.0, 0.0), k=8), path_point((5.0, 0.0), (1.0, 0.0), k=16)]
        )
        with pytest.raises(PreconditionError):
            energy(model, g)

    def test_self_term_is_confinement(self):
        model = DiffusionModel()
        p = path_point((0.0, 0.0), (0.6, 0.8), k=8)  # sup norm 1.0
        assert energy(model, Configuration([p])) == pytest.approx(-2.0, rel=1e-12)

    def test_pair_term_against_direct_sum(self):
        model = DiffusionModel()
        k = 8
        p = path_point((0.0, 0.0), (1.0, 0.0), k)
        q = path_point((2.0, 0.0), (0.0, 1.0), k)
        sep = np.linalg.norm(p.mark.samples - q.mark.samples, axis=1)
        vals = np.minimum(sep**2, 1e6)
        h = 1.0 / k
        manual = h * (0.5 * vals[0] + vals[1:-1].sum() + 0.5 * vals[-1])
        expect = model.self_term(p) + model.self_term(q) + lj_pair(2.0) + manual
        got = energy(model, Configuration([p, q]))
        assert got == pytest.approx(expect, rel=1e-12)

    def test_gate_is_exact_zero(self):
        model = DiffusionModel(a0=1.5)
        p = path_point((0.0, 0.0), (1.0, 0.0), 8)
        q = path_point((3.6, 0.0), (0.0, 1.0), 8)  # 3.6 > 1.5 + 1 + 1
        assert model.pair_term(p, q) == 0.0


class TestTranslationInvariance:
    def test_all_models(self):
        rng = stream(503, 0)
        spec = LangevinSpec.named("quartic", step_count=16)
        for _ in range(10):
            g = random_scalar_config(rng, n_max=6, extent=2.0, mark_hi=1.0)
            v = rng.uniform(-20, 20, size=2)
            shifted = Configuration(
                [
                    MarkedPoint((p.location[0] + v[0], p.location[1] + v[1]), p.mark, p.mark_norm)
                    for p in g.points
                ],
                dimension=2,
            )
            for model in ALL_MODELS:
                a, b = energy(model, g), energy(model, shifted)
                if math.isinf(a) or math.isinf(b):
                    assert a == b
                else:
                    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)
        # diffusion needs path marks
        pts = []
        for _ in range(4):
            loc = tuple(rng.uniform(-2, 2, size=2))
            pts.append(MarkedPoint.make(loc, sample_mark(spec, rng)))
        g = Configuration(pts)
        v = rng.uniform(-20, 20, size=2)
        shifted = Configuration(
            [
                MarkedPoint((p.location[0] + v[0], p.location[1] + v[1]), p.mark, p.mark_norm)
                for p in g.points
            ]
        )
        model = DiffusionModel()
        assert energy(model, shifted) == pytest.approx(energy(model, g), rel=1e-9)


class TestInteractionRange:
    def test_examples(self):
        w = Box.centered_cube(1.0, 2)
        empty = Configuration.empty(2)
        assert interaction_range(empty, w, 1, 1.0) == pytest.approx(9.0)
        g0 = config([mp((0.0, 0.0), 0.0)])
        assert interaction_range(g0, w, 1, 1.0) == pytest.approx(9.0)
        g5 = config([mp((0.0, 0.0), 0.5)])
        assert interaction_range(g5, w, 1, 1.0) == pytest.approx(10.0)

    def test_only_window_marks_count(self):
        w = Box.centered_cube(1.0, 2)
        g = config([mp((0.5, 0.5), 0.25), mp((5.0, 5.0), 3.0)])
        assert interaction_range(g, w, 1, 1.0) == pytest.approx(9.5)


class TestConditionalEnergy:
    def test_free_boundary_is_plain_energy(self):
        w = Box.centered_cube(1.0, 2)
        g = config([mp((0.2, 0.1), 0.5), mp((-0.5, 0.4), 0.6)])
        empty = Configuration.empty(2)
        for model in ALL_MODELS:
            assert conditional_energy(model, g, empty, w, 1, 1.0) == energy(model, g)

    def test_interior_must_sit_in_window(self):
        w = Box.centered_cube(1.0, 2)
        g = config([mp((2.0, 0.0), 0.1)])
        with pytest.raises(PreconditionError):
            conditional_energy(IdealModel(), g, Configuration.empty(2), w, 1, 1.0)

    def test_untempered_environment_rejected(self):
        w = Box.centered_cube(1.0, 2)
        xi = config([mp((1.5, 0.0), 3.0)])  # statistic 28 > 1*l^2 for small l
        assert not minimal_t(xi, 1.0) == 1
        with pytest.raises(PreconditionError):
            conditional_energy(
                HardSphereModel(), Configuration.empty(2), xi, w, 1, 1.0
            )

    def test_diffusion_cross_term(self):
        model = DiffusionModel()
        w = Box.centered_cube(1.0, 2)
        p = path_point((0.0, 0.0), (0.6, 0.8), 8)
        q = path_point((1.8, 0.0), (0.0, 0.5), 8)
        interior = Configuration([p])
        xi = Configuration([q])
        t = minimal_t(xi, 1.0)
        got = conditional_energy(model, interior, xi, w, t, 1.0)
        assert got == pytest.approx(model.self_term(p) + model.pair_term(p, q), rel=1e-12)

    def test_far_environment_is_bit_identical_to_free(self):
        rng = stream(504, 0)
        w = Box.centered_cube(1.0, 2)
        for model in ALL_MODELS:
            for _ in range(10):
                g = restrict(random_scalar_config(rng, n_max=5, extent=0.95, mark_hi=0.8), w)
                r = interaction_range(g, w, 2, 1.0)
                far = []
                for _ in range(4):
                    ang = rng.uniform(0, 2 * math.pi)
                    dist = 1.0 + r + float(rng.uniform(1.0, 4.0))
                    far.append(
                        mp(
                            (dist * math.cos(ang), dist * math.sin(ang)),
                            float(rng.uniform(0.0, 0.4)),
                        )
                    )
                xi = Configuration(far)
                t = max(2, minimal_t(xi, 1.0))
                base = energy(model, g)
                cond = conditional_energy(model, g, xi, w, t, 1.0)
                assert cond == base

    def test_range_locality_under_environment_edits(self):
        # Changing the environment beyond the interaction range never moves
        # the conditional energy, even when near atoms are present.
        rng = stream(505, 0)
        w = Box.centered_cube(1.0, 2)
        model = PairPotentialModel(soft_bump, phi_id="soft_bump")
        for _ in range(15):
            g = restrict(random_scalar_config(rng, n_max=5, extent=0.95, mark_hi=0.7), w)
            near = [
                mp(
                    (float(rng.uniform(1.0, 1.8)), float(rng.uniform(-1.0, 1.0))),
                    float(rng.uniform(0.0, 0.6)),
                )
            ]
            r = interaction_range(g, w, 3, 1.0)
            far_a = mp((r + 5.0, 0.0), 0.3)
            far_b = mp((0.0, -(r + 7.0)), 0.2)
            xi1 = Configuration(near)
            xi2 = Configuration(near + [far_a, far_b])
            t = max(3, minimal_t(xi2, 1.0))
            v1 = conditional_energy(model, g, xi1, w, t, 1.0)
            v2 = conditional_energy(model, g, xi2, w, t, 1.0)
            assert v1 == v2

    def test_quermass_conditional_matches_window_limit(self):
        # The pruned evaluation must agree with the stabilized increment
        # H(gamma union xi_k) - H(xi_k) over growing environment windows.
        rng = stream(506, 0)
        model = QuermassModel(0.5, 0.2, 0.8)
        w = Box.centered_cube(1.0, 2)
        for _ in range(10):
            g = restrict(random_scalar_config(rng, n_max=4, extent=0.9, mark_hi=0.8), w)
            env_pts = []
            for _ in range(6):
                ang = rng.uniform(0, 2 * math.pi)
                dist = float(rng.uniform(1.2, 4.0))
                env_pts.append(
                    mp((dist * math.cos(ang), dist * math.sin(ang)), float(rng.uniform(0.1, 0.9)))
                )
            xi = Configuration(env_pts)
            t = minimal_t(xi, 1.0)
            cond = conditional_energy(model, g, xi, w, t, 1.0)
            xi_out = restrict_complement(xi, w)
            increments = []
            for k in (8.0, 12.0):
                big = dilate(w, k)
                xi_k = restrict(xi_out, big)
                joint = energy(model, g.union(xi_k))
                alone = energy(model, xi_k)
                increments.append(joint - alone)
            assert increments[0] == pytest.approx(increments[1], abs=1e-9)
            assert cond == pytest.approx(increments[0], abs=1e-9)


class TestAdditivity:
    def setup_method(self):
        self.lam = Box.centered_cube(1.0, 2)
        self.delta = Box.centered_cube(2.0, 2)

    def _fillings(self, rng, mark_hi=0.5):
        a = restrict(random_scalar_config(rng, n_max=4, extent=0.9, mark_hi=mark_hi), self.lam)
        b = restrict(random_scalar_config(rng, n_max=4, extent=0.9, mark_hi=mark_hi), self.lam)
        mids = []
        for _ in range(3):
            x = float(rng.uniform(1.05, 1.95)) * (1 if rng.random() < 0.5 else -1)
            y = float(rng.uniform(-1.95, 1.95))
            mids.append(mp((x, y), float(rng.uniform(0.0, mark_hi))))
        return a, b, Configuration(mids)

    def test_free_boundary_zero_residual(self):
        rng = stream(507, 0)
        empty = Configuration.empty(2)
        for model in ALL_MODELS:
            for _ in range(6):
                a, b, mid = self._fillings(rng)
                report = additivity_check(model, self.lam, self.delta, a, b, mid, empty, 2, 1.0)
                if report.comparable:
                    assert abs(report.residual) <= 1e-9

    def test_conditioned_zero_residual(self):
        rng = stream(508, 0)
        model = PairPotentialModel(soft_bump, phi_id="soft_bump")
        for _ in range(20):
            a, b, mid = self._fillings(rng)
            xi = Configuration(
                [
                    mp(
                        (float(rng.uniform(2.05, 5.0)), float(rng.uniform(-3.0, 3.0))),
                        float(rng.uniform(0.0, 0.5)),
                    )
                    for _ in range(3)
                ]
            )
            t = minimal_t(xi, 1.0)
            report = additivity_check(model, self.lam, self.delta, a, b, mid, xi, t, 1.0)
            assert report.comparable
            assert abs(report.residual) <= 1e-9

    def test_diffusion_residual(self):
        # Floating-point cancellation in the two window increments scales with
        # the largest pair term, so keep atoms separated the way the repulsive
        # core would in equilibrium; the identity being checked is algebraic.
        rng = stream(509, 0)
        spec = LangevinSpec.named("quartic", step_count=16)
        model = DiffusionModel()

        def place(taken, lo_x, hi_x, lo_y, hi_y, sep=0.7):
            for _ in range(200):
                loc = (float(rng.uniform(lo_x, hi_x)), float(rng.uniform(lo_y, hi_y)))
                if all(math.dist(loc, q) >= sep for q in taken):
                    taken.append(loc)
                    return MarkedPoint.make(loc, sample_mark(spec, rng))
            raise RuntimeError("could not place a separated atom")

        for _ in range(20):
            taken_a, taken_b = [], []
            a = Configuration([place(taken_a, -0.95, 0.95, -0.95, 0.95) for _ in range(3)])
            b = Configuration([place(taken_b, -0.95, 0.95, -0.95, 0.95) for _ in range(2)])
            shared = taken_a + taken_b
            mid_pts = []
            for side in (1.0, -1.0):
                x_lo, x_hi = (1.05, 1.95) if side > 0 else (-1.95, -1.05)
                mid_pts.append(place(shared, x_lo, x_hi, -1.95, 1.95))
            mid = Configuration(mid_pts)
            xi_pts = [place(shared, 2.05, 6.0, -4.0, 4.0) for _ in range(3)]
            xi = Configuration(xi_pts)
            t = minimal_t(xi, 1.0)
            report = additivity_check(model, self.lam, self.delta, a, b, mid, xi, t, 1.0)
            assert report.comparable
            assert abs(report.residual) <= 1e-9

    def test_middle_must_avoid_inner_window(self):
        bad_mid = config([mp((0.0, 0.0), 0.1)])
        with pytest.raises(PreconditionError):
            additivity_check(
                IdealModel(),
                self.lam,
                self.delta,
                Configuration.empty(2),
                Configuration.empty(2),
                bad_mid,
                Configuration.empty(2),
                1,
                1.0,
            )

    def test_infinite_case_reported_incomparable(self):
        a = config([mp((0.0, 0.0), 1.0), mp((0.5, 0.0), 1.0)])
        report = additivity_check(
            HardSphereModel(),
            self.lam,
            self.delta,
            a,
            Configuration.empty(2),
            Configuration.empty(2),
            Configuration.empty(2),
            1,
            1.0,
        )
        assert not report.comparable
