"""Test contact facets and the static mating of two faces."""

from itertools import combinations

import numpy as np
import pytest

from modal_assembly.constants import Case
from modal_assembly.contact import (
    Facet,
    MatingSetup,
    assemble,
    assembly_frame,
    barycentric,
    contact_facet,
    contact_facet_2d,
    contact_facet_3d,
    difference_signature,
    flatness,
    form_bound,
    gap_frame,
)
from modal_assembly.errors import InvalidArgumentError
from modal_assembly.kinematics import AlphaMatrix
from modal_assembly.mesh import Mesh, SurfaceField
from modal_assembly.modal import ModalBasis
from modal_assembly.signature import ModalSignature, zero_signature

CENTRE = MatingSetup(force_point=(20.0, 20.0), m=20)


def plane_height(facet: Facet, x: float, z: float) -> float:
    """Height of the support plane above (x, z)."""
    return float(facet.height(np.array([x]), np.array([z]))[0])


class TestMatingSetup:
    """Test the force point and mode count checks."""

    @pytest.mark.parametrize(
        "force_point", [(0.0, 20.0), (20.0, 40.0), (-1.0, 5.0)]
    )
    def test_force_point_inside(
        self, grid_mesh: Mesh, force_point: tuple[float, float]
    ) -> None:
        """The force acts strictly inside the footprint."""
        with pytest.raises(InvalidArgumentError, match="footprint"):
            MatingSetup(force_point, 20).validate(grid_mesh)

    def test_mode_count(self, grid_mesh: Mesh) -> None:
        """At least one mode is retained."""
        with pytest.raises(InvalidArgumentError):
            MatingSetup((20.0, 20.0), 0).validate(grid_mesh)

    def test_profile_ignores_z(self, profile_mesh: Mesh) -> None:
        """Only x matters on a profile."""
        MatingSetup((20.0, 99.0), 5).validate(profile_mesh)


class TestProfileContact:
    """Test the upper hull of a profile."""

    def test_cap_vertex_tie(self, profile_mesh: Mesh) -> None:
        """On a hull vertex the segment with smaller indices wins."""
        x = profile_mesh.x_coords
        field = SurfaceField(profile_mesh, -((x - 20.0) ** 2) / 400.0)
        facet = contact_facet_2d(field, 20.0)
        assert facet.indices == (9, 10)
        assert facet.weights == pytest.approx((0.0, 1.0))
        assert not facet.flat

    def test_valley_rests_on_the_ends(self, profile_mesh: Mesh) -> None:
        """A hollow profile touches at both ends."""
        x = profile_mesh.x_coords
        field = SurfaceField(profile_mesh, (x - 20.0) ** 2 / 400.0)
        facet = contact_facet_2d(field, 13.0)
        assert facet.indices == (0, 20)
        assert facet.plane == pytest.approx((1.0, 0.0, 0.0))

    def test_straight_profile_is_flat(self, profile_mesh: Mesh) -> None:
        """A straight profile touches along its whole length."""
        x = profile_mesh.x_coords
        field = SurfaceField(profile_mesh, 0.01 + 0.001 * x)
        facet = contact_facet(field, (7.0, 0.0))
        assert facet.flat
        assert facet.indices == (0, 20)
        assert facet.plane == pytest.approx((0.01, 0.001, 0.0))

    def test_rejects_grid(self, small_grid_mesh: Mesh) -> None:
        """The profile search needs a profile."""
        field = SurfaceField(small_grid_mesh, np.zeros(121))
        with pytest.raises(InvalidArgumentError):
            contact_facet_2d(field, 20.0)

    def test_force_on_the_end(self, profile_mesh: Mesh) -> None:
        """The force abscissa must be interior."""
        field = SurfaceField(profile_mesh, np.zeros(21))
        with pytest.raises(InvalidArgumentError):
            contact_facet_2d(field, 40.0)

    @pytest.mark.slow
    def test_matches_brute_force(self, profile_mesh: Mesh) -> None:
        """50 random profiles against an exhaustive segment search."""
        rng = np.random.default_rng(21)
        x = profile_mesh.x_coords
        for _ in range(50):
            v = rng.normal(size=x.size)
            x_force = float(rng.uniform(0.5, 39.5))
            facet = contact_facet_2d(SurfaceField(profile_mesh, v), x_force)
            best = max(
                v[i] + (v[j] - v[i]) * (x_force - x[i]) / (x[j] - x[i])
                for i, j in combinations(range(x.size), 2)
                if x[i] <= x_force <= x[j]
            )
            height = plane_height(facet, x_force, 0.0)
            assert height == pytest.approx(best, abs=1e-9)
            assert min(facet.weights) >= -1e-12
            gap = facet.height(x, np.zeros_like(x)) - v
            assert gap.min() >= -1e-9
            np.testing.assert_allclose(gap[list(facet.indices)], 0, atol=1e-9)


class TestGridContact:
    """Test the upper hull of a grid."""

    @pytest.mark.parametrize(
        ("force_point", "triangle"),
        [((10.0, 5.0), (0, 10, 110)), ((30.0, 35.0), (0, 110, 120))],
    )
    def test_flat_uses_corner_triangles(
        self,
        small_grid_mesh: Mesh,
        force_point: tuple[float, float],
        triangle: tuple[int, int, int],
    ) -> None:
        """A plane touches everywhere; a corner triangle is reported."""
        nodes = small_grid_mesh.nodes
        v = 0.02 - 0.001 * nodes[:, 0] + 0.0005 * nodes[:, 1]
        facet = contact_facet_3d(SurfaceField(small_grid_mesh, v), force_point)
        assert facet.flat
        assert facet.indices == triangle
        assert facet.plane == pytest.approx((0.02, -0.001, 0.0005))
        assert sum(facet.weights) == pytest.approx(1.0)

    def test_dome(self, small_grid_mesh: Mesh) -> None:
        """A dome is touched by the triangle under the force."""
        nodes = small_grid_mesh.nodes
        v = -((nodes[:, 0] - 20) ** 2 + (nodes[:, 1] - 20) ** 2) / 800.0
        field = SurfaceField(small_grid_mesh, v)
        facet = contact_facet_3d(field, (21.0, 22.5))
        gap = facet.height(nodes[:, 0], nodes[:, 1]) - v
        assert gap.min() >= -1e-12
        np.testing.assert_allclose(gap[list(facet.indices)], 0, atol=1e-12)
        corners = nodes[list(facet.indices)]
        assert np.all(np.abs(corners - [21.0, 22.5]).max(axis=1) <= 4.0)

    def test_planar_roof_facet(self, small_grid_mesh: Mesh) -> None:
        """Any triangle of a many-node planar facet gives the same plane."""
        nodes = small_grid_mesh.nodes
        v = -np.abs(nodes[:, 0] - 20.0) / 100.0
        field = SurfaceField(small_grid_mesh, v)
        facet = contact_facet_3d(field, (10.0, 13.0))
        assert not facet.flat
        assert all(nodes[k, 0] <= 20.0 for k in facet.indices)
        assert facet.plane == pytest.approx((-0.2, 0.01, 0.0), abs=1e-12)
        assert min(facet.weights) >= -1e-12
        gap = facet.height(nodes[:, 0], nodes[:, 1]) - v
        assert gap.min() >= -1e-12

    def test_rejects_profile(self, profile_mesh: Mesh) -> None:
        """The grid search needs a grid."""
        field = SurfaceField(profile_mesh, np.zeros(21))
        with pytest.raises(InvalidArgumentError):
            contact_facet_3d(field, (20.0, 20.0))

    def test_barycentric(self) -> None:
        """Weights of a point in a triangle, NaN when degenerate."""
        triangles = np.array(
            [[[0, 0], [4, 0], [0, 4]], [[0, 0], [1, 1], [2, 2]]], dtype=float
        )
        weights = barycentric(triangles, (1.0, 2.0))
        np.testing.assert_allclose(weights[0], [0.25, 0.25, 0.5])
        assert np.all(np.isnan(weights[1]))

    @pytest.mark.slow
    def test_matches_brute_force(self, small_grid_mesh: Mesh) -> None:
        """200 random grids against every triangle of nodes."""
        nodes = small_grid_mesh.nodes
        triples = np.array(list(combinations(range(len(nodes)), 3)))
        forces = [(13.3, 27.1), (2.2, 3.7), (31.9, 18.6), (25.5, 38.1)]
        covering = []
        for force in forces:
            weights = barycentric(nodes[triples], force)
            with np.errstate(invalid="ignore"):
                holds = np.all(weights >= -1e-12, axis=1)
            covering.append((triples[holds], weights[holds]))

        rng = np.random.default_rng(42)
        for k in range(200):
            v = rng.normal(size=len(nodes))
            force = forces[k % len(forces)]
            facet = contact_facet_3d(SurfaceField(small_grid_mesh, v), force)
            held, weights = covering[k % len(forces)]
            best = float(np.max(np.sum(weights * v[held], axis=1)))
            height = plane_height(facet, *force)
            assert height == pytest.approx(best, abs=1e-9)
            assert min(facet.weights) >= -1e-12
            gap = facet.height(nodes[:, 0], nodes[:, 1]) - v
            assert gap.min() >= -1e-9


class TestAssemble:
    """Test mating two faces."""

    def test_perfect_faces(
        self, plate: ModalBasis, plate_alpha: AlphaMatrix
    ) -> None:
        """Two perfect faces mate without any displacement."""
        zero = zero_signature(plate, 20)
        result = assemble(zero, zero, CENTRE, plate_alpha)
        assert result.facet.flat
        assert result.min_gap == 0.0
        np.testing.assert_array_equal(result.sdt_with_form.translation, 0)
        np.testing.assert_array_equal(result.sdt_rigid_only.rotation, 0)

    def test_rigid_only_signatures(
        self, plate: ModalBasis, plate_alpha: AlphaMatrix
    ) -> None:
        """Without form errors both assemblies agree."""
        rng = np.random.default_rng(8)
        for _ in range(10):
            first = ModalSignature(rng.normal(scale=0.01, size=3), plate)
            second = ModalSignature(rng.normal(scale=0.01, size=3), plate)
            result = assemble(first, second, CENTRE, plate_alpha)
            effect = result.sdt_form_effect.components(Case.THREE_D)
            np.testing.assert_allclose(effect, 0.0, atol=1e-10)
            np.testing.assert_allclose(result.gap.v, 0.0, atol=1e-10)

    def test_lifting_the_lower_face(
        self, beam: ModalBasis, beam_alpha: AlphaMatrix
    ) -> None:
        """Raising A2 raises part 1, raising A1 lowers it."""
        setup = MatingSetup((20.0, 0.0), 5)
        zero = zero_signature(beam, 5)
        lifted = ModalSignature([0.01], beam)
        up = assemble(zero, lifted, setup, beam_alpha)
        down = assemble(lifted, zero, setup, beam_alpha)
        assert up.sdt_with_form.translation[1] == pytest.approx(0.01)
        assert down.sdt_with_form.translation[1] == pytest.approx(-0.01)

    def test_form_effect_bound(
        self, plate: ModalBasis, plate_alpha: AlphaMatrix
    ) -> None:
        """With the force at the centre, form shifts T_y by at most the
        summed flatness of the two form parts."""
        rng = np.random.default_rng(30)
        for _ in range(20):
            first = ModalSignature(rng.normal(scale=0.01, size=20), plate)
            second = ModalSignature(rng.normal(scale=0.01, size=20), plate)
            result = assemble(first, second, CENTRE, plate_alpha)
            shift = abs(result.sdt_form_effect.translation[1])
            assert shift <= form_bound(first, second) + 1e-12
            assert result.min_gap >= -1e-9

    @pytest.mark.parametrize(
        ("basis_name", "alpha_name", "setup", "case"),
        [
            ("beam", "beam_alpha", MatingSetup((17.0, 0.0), 9), Case.TWO_D),
            ("plate", "plate_alpha", CENTRE, Case.THREE_D),
        ],
    )
    def test_raising_a2_only_translates(
        self,
        request: pytest.FixtureRequest,
        basis_name: str,
        alpha_name: str,
        setup: MatingSetup,
        case: Case,
    ) -> None:
        """A constant added to A2 shifts T_y by that constant alone."""
        basis = request.getfixturevalue(basis_name)
        alpha = request.getfixturevalue(alpha_name)
        rng = np.random.default_rng(61)
        for shift in (-0.02, 0.005, 0.03):
            first = ModalSignature(rng.normal(scale=0.01, size=9), basis)
            lam = rng.normal(scale=0.01, size=9)
            second = ModalSignature(lam, basis)
            lam[0] += shift
            raised = ModalSignature(lam, basis)
            before = assemble(first, second, setup, alpha)
            after = assemble(first, raised, setup, alpha)
            assert after.contacts == before.contacts
            expected = before.sdt_with_form.components(case)
            expected[0] += shift
            np.testing.assert_allclose(
                after.sdt_with_form.components(case),
                expected,
                rtol=0.0,
                atol=1e-10,
            )
            np.testing.assert_allclose(
                after.sdt_form_effect.components(case),
                before.sdt_form_effect.components(case),
                rtol=0.0,
                atol=1e-10,
            )

    def test_contacts_touch(
        self, beam: ModalBasis, beam_alpha: AlphaMatrix
    ) -> None:
        """The gap vanishes at the contact nodes of a profile mating."""
        rng = np.random.default_rng(4)
        first = ModalSignature(rng.normal(scale=0.01, size=9), beam)
        second = ModalSignature(rng.normal(scale=0.01, size=9), beam)
        result = assemble(first, second, MatingSetup((20, 0), 9), beam_alpha)
        assert len(result.contacts) == 2
        np.testing.assert_allclose(
            result.gap.v[list(result.contacts)], 0.0, atol=1e-12
        )
        assert result.min_gap >= -1e-12

    def test_mismatched_bases(
        self, beam: ModalBasis, plate: ModalBasis, plate_alpha: AlphaMatrix
    ) -> None:
        """Both faces must share one basis."""
        with pytest.raises(InvalidArgumentError):
            assemble(
                zero_signature(beam, 5),
                zero_signature(plate, 5),
                CENTRE,
                plate_alpha,
            )

    def test_outside_force(
        self, plate: ModalBasis, plate_alpha: AlphaMatrix
    ) -> None:
        """The force point is checked before mating."""
        zero = zero_signature(plate, 20)
        with pytest.raises(InvalidArgumentError):
            assemble(zero, zero, MatingSetup((50.0, 20.0), 20), plate_alpha)

    def test_difference_pads(self, beam: ModalBasis) -> None:
        """The shorter signature is padded with zeros."""
        diff = difference_signature(
            ModalSignature([1.0, 2.0], beam),
            ModalSignature([3.0, 3.0, 3.0], beam),
        )
        assert diff.lam.tolist() == [2.0, 1.0, 3.0]

    def test_flatness(self, profile_mesh: Mesh) -> None:
        """Peak to valley height."""
        x = profile_mesh.x_coords
        assert flatness(SurfaceField(profile_mesh, 0.001 * x)) == (
            pytest.approx(0.04)
        )

    def test_frames(self, plate: ModalBasis, plate_alpha: AlphaMatrix) -> None:
        """One summary row and one gap row per node."""
        zero = zero_signature(plate, 20)
        result = assemble(zero, zero, CENTRE, plate_alpha)
        frame = assembly_frame(result)
        assert len(frame) == 1
        assert frame.columns[:4].tolist() == [
            "contact_1",
            "contact_2",
            "contact_3",
            "flat",
        ]
        assert "form_effect_rz" in frame.columns
        assert frame.columns[-1] == "min_gap"
        gaps = gap_frame(result)
        assert gaps.columns.tolist() == ["x", "z", "gap_mm"]
        assert len(gaps) == 441
