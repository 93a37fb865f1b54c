import numpy as np
import pytest
import scipy.linalg
import sympy

from penalty_contact.elasticity import (
    Material,
    apply_dirichlet,
    assemble_load,
    assemble_stiffness,
    build_dofmap,
    element_stiffness,
    ellipticity_estimate,
    interpolate_nodal,
    solve_spd,
)
from penalty_contact.errors import AssemblyError, IllPosedProblemError, InvalidArgumentError
from penalty_contact.mesh import BoundaryTag, Mesh, generate_structured_square

from conftest import CLAMPED_TAGGING, CONTACT_TAGGING

MAT = Material.from_engineering(1.0, 0.3)
# 7-point degree-5 rule on the reference triangle (weights sum to 1/2)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
DUNAVANT7 = (
    np.array([[1 / 3, 1 / 3], [_B1, _B1], [_A1, _B1], [_B1, _A1], [_B2, _B2], [_A2, _B2], [_B2, _A2]]),
    0.5 * np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3),
)


def _single_triangle():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return Mesh(nodes, np.array([[0, 1, 2]]), np.zeros((0, 2), int), (), 1, 0)


def test_material_validation():
    with pytest.raises(InvalidArgumentError):
        Material(mu=0.0, lambda_lame=1.0)
    with pytest.raises(InvalidArgumentError):
        Material.from_engineering(1.0, 0.5)
    m = Material.from_engineering(2.0, 0.25)
    assert m.young == pytest.approx(2.0)


def test_element_matches_symbolic_energy():
    x, y = sympy.symbols("x y")
    q = sympy.symbols("q0:6")
    phi = [1 - x - y, x, y]
    ux = sum(q[2 * i] * phi[i] for i in range(3))
    uy = sum(q[2 * i + 1] * phi[i] for i in range(3))
    exx, eyy = sympy.diff(ux, x), sympy.diff(uy, y)
    exy = (sympy.diff(ux, y) + sympy.diff(uy, x)) / 2
    mu, lam = 1, 0
    density = 2 * mu * (exx**2 + eyy**2 + 2 * exy**2) + lam * (exx + eyy) ** 2
    energy = sympy.integrate(sympy.integrate(density / 2, (y, 0, 1 - x)), (x, 0, 1))
    oracle = np.array(sympy.hessian(energy, q), dtype=float)
    Ke = element_stiffness(_single_triangle(), Material(mu=1.0, lambda_lame=0.0))[0]
    assert np.max(np.abs(Ke - oracle)) <= 1e-14


def test_degenerate_triangle_rejected():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    m = Mesh(nodes, np.array([[0, 1, 2]]), np.zeros((0, 2), int), (), 1, 0)
    with pytest.raises(AssemblyError):
        element_stiffness(m, MAT)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_rigid_motions_span_kernel(n):
    m = generate_structured_square(n, CONTACT_TAGGING)
    K = assemble_stiffness(m, MAT)
    x, y = m.nodes[:, 0], m.nodes[:, 1]
    modes = [np.column_stack([np.ones_like(x), 0 * x]).ravel(),
             np.column_stack([0 * x, np.ones_like(x)]).ravel(),
             np.column_stack([-y, x]).ravel()]
    for r in modes:
        assert np.max(np.abs(K @ r)) <= 1e-12
    ev = np.linalg.eigvalsh(K.toarray())
    assert np.sum(ev < 1e-10 * ev.max()) == 3


def test_stiffness_symmetric_and_semidefinite(rng):
    m = generate_structured_square(6, CONTACT_TAGGING)
    K = assemble_stiffness(m, MAT)
    assert abs(K - K.T).max() <= 1e-14 * abs(K).max()
    for _ in range(20):
        v = rng.standard_normal(m.num_dofs)
        assert v @ K @ v >= -1e-12


def test_clamped_system_positive_definite():
    m = generate_structured_square(2, CONTACT_TAGGING)
    sys = apply_dirichlet(assemble_stiffness(m, MAT), np.zeros(m.num_dofs), build_dofmap(m))
    assert np.linalg.eigvalsh(sys.matrix.toarray()).min() > 0


@pytest.mark.parametrize("n", [2, 12])
def test_ellipticity_estimate_matches_dense(n):
    m = generate_structured_square(n, CONTACT_TAGGING)
    sys = apply_dirichlet(assemble_stiffness(m, MAT), np.zeros(m.num_dofs), build_dofmap(m))
    lam = ellipticity_estimate(sys)
    assert lam > 0
    assert lam == pytest.approx(np.linalg.eigvalsh(sys.matrix.toarray())[0], rel=1e-8)


def test_load_partition_of_unity():
    m = generate_structured_square(4, CONTACT_TAGGING)
    F = assemble_load(m, f=lambda x, y: (0 * x, -1 + 0 * y))
    assert F[1::2].sum() == pytest.approx(-1.0, abs=1e-14)
    assert F[0::2].sum() == pytest.approx(0.0, abs=1e-15)
    G = assemble_load(m, g=lambda x, y: (0 * x, -2.5 + 0 * y))
    assert G[1::2].sum() == pytest.approx(-2.5, abs=1e-14)  # top side only
    assert np.all(assemble_load(m) == 0)


def test_load_linear_body_force_exact():
    # the midpoint rule integrates quadratics exactly: int_Omega x * phi_i summed = 1/2
    m = generate_structured_square(3, CONTACT_TAGGING)
    F = assemble_load(m, f=lambda x, y: (x, x * y))
    assert F[0::2].sum() == pytest.approx(0.5, abs=1e-14)
    assert F[1::2].sum() == pytest.approx(0.25, abs=1e-14)
    # first moment: sum_i x_i F_i = int x^2 for P1 nodal x
    assert m.nodes[:, 0] @ F[0::2] == pytest.approx(1 / 3, abs=1e-14)


def test_load_piecewise_traction_breaks():
    m = generate_structured_square(4, CONTACT_TAGGING)

    def g(x, y):
        return 0 * x, np.where((x > 0.3) & (x < 0.55), -1.0, 0.0)

    F = assemble_load(m, g=g, breakpoints=(0.3, 0.55))
    assert F[1::2].sum() == pytest.approx(-0.25, abs=1e-14)
    assert m.nodes[:, 0] @ F[1::2] == pytest.approx(-(0.55**2 - 0.3**2) / 2, abs=1e-14)


def test_empty_dirichlet_is_ill_posed():
    tagging = {"bottom": BoundaryTag.CONTACT, "right": BoundaryTag.NEUMANN,
               "top": BoundaryTag.NEUMANN, "left": BoundaryTag.NEUMANN}
    m = generate_structured_square(4, tagging)
    with pytest.raises(IllPosedProblemError):
        apply_dirichlet(assemble_stiffness(m, MAT), np.zeros(m.num_dofs), build_dofmap(m))


def test_homogeneous_problem_has_zero_solution():
    m = generate_structured_square(4, CONTACT_TAGGING)
    U = solve_spd(apply_dirichlet(assemble_stiffness(m, MAT), np.zeros(m.num_dofs), build_dofmap(m)))
    assert np.all(U == 0)


def test_prescribed_values_and_equilibrium():
    m = generate_structured_square(6, CONTACT_TAGGING)
    dofs = build_dofmap(m, lambda x, y: (0.1 + 0 * x, 0.02 * y))
    K = assemble_stiffness(m, MAT)
    F = assemble_load(m, f=lambda x, y: (np.sin(x), -1 + 0 * y), g=lambda x, y: (0 * x, -0.5 + 0 * y))
    U = solve_spd(apply_dirichlet(K, F, dofs))
    assert np.array_equal(U[dofs.constrained], dofs.values)
    R = K @ U - F
    assert np.max(np.abs(R[dofs.free])) <= 1e-10 * np.max(np.abs(F))


def test_sparse_matches_dense_solve():
    m = generate_structured_square(6, CONTACT_TAGGING)
    K = assemble_stiffness(m, MAT)
    F = assemble_load(m, f=lambda x, y: (x * y, -1 + 0 * y))
    dofs = build_dofmap(m, lambda x, y: (0 * x, 0.01 * y))
    U = solve_spd(apply_dirichlet(K, F, dofs))
    Kd = K.toarray()
    free, con = dofs.free, dofs.constrained
    dense = np.zeros(m.num_dofs)
    dense[con] = dofs.values
    dense[free] = scipy.linalg.solve(Kd[np.ix_(free, free)], F[free] - Kd[np.ix_(free, con)] @ dofs.values,
                                     assume_a="pos")
    assert np.max(np.abs(U - dense)) <= 1e-12 * max(1.0, np.max(np.abs(dense)))


def test_linear_field_reproduced_exactly():
    m = generate_structured_square(5, CLAMPED_TAGGING | {"bottom": BoundaryTag.DIRICHLET})
    field = lambda x, y: (0.1 * x + 0.2 * y, -0.3 * x + 0.05 * y)
    U = solve_spd(apply_dirichlet(assemble_stiffness(m, MAT), np.zeros(m.num_dofs), build_dofmap(m, field)))
    assert np.max(np.abs(U - interpolate_nodal(m, field))) <= 1e-12


def test_uniform_compression_patch(patch):
    # no contact: bottom held at the exact trace, then the closed-form state is linear
    m = generate_structured_square(4, dict(CLAMPED_TAGGING, top=BoundaryTag.NEUMANN))
    exact = patch.exact_for(0.0)
    K = assemble_stiffness(m, patch.material)
    F = assemble_load(m, g=patch.traction)
    U = solve_spd(apply_dirichlet(K, F, build_dofmap(m, exact)))
    assert np.max(np.abs(U - interpolate_nodal(m, exact))) <= 1e-12


def _interp_errors(n):
    m = generate_structured_square(n, CONTACT_TAGGING)
    u = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    grad = lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                         np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))
    uh = u(m.nodes[:, 0], m.nodes[:, 1])
    pts, w = DUNAVANT7
    l2 = h1 = 0.0
    for tri, area in zip(m.triangles, m.areas):
        p = m.nodes[tri]
        J = np.column_stack([p[1] - p[0], p[2] - p[0]])
        q = p[0] + pts @ J.T
        lam = np.column_stack([1 - pts.sum(1), pts])
        gh = np.linalg.solve(J.T, np.array([uh[tri[1]] - uh[tri[0]], uh[tri[2]] - uh[tri[0]]]))
        gx, gy = grad(q[:, 0], q[:, 1])
        l2 += 2 * area * w @ (u(q[:, 0], q[:, 1]) - lam @ uh[tri]) ** 2
        h1 += 2 * area * w @ ((gx - gh[0]) ** 2 + (gy - gh[1]) ** 2)
    return np.sqrt(l2), np.sqrt(h1)


def test_interpolation_rates():
    errs = np.array([_interp_errors(n) for n in (4, 8, 16)])
    rates = np.log2(errs[:-1] / errs[1:])
    assert np.all(np.abs(rates[:, 0] - 2) <= 0.1)
    assert np.all(np.abs(rates[:, 1] - 1) <= 0.1)


def test_interpolation_preserves_constants_and_sign():
    m = generate_structured_square(3, CONTACT_TAGGING)
    U = interpolate_nodal(m, lambda x, y: (1 + 0 * x, x * x + y * y))
    assert np.all(U[0::2] == 1) and np.all(U[1::2] >= 0)
