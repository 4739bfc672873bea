#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hodohj/hodograph.hpp"
#include "hodohj/oracles.hpp"
#include "hodohj/solver.hpp"

namespace py = pybind11;
using namespace hodohj;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Implicit solutions of u_t + lambda |grad u|^2 = 0 and the hodograph transform";

  // Translators run newest first, so the base class goes in first.
  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", error.ptr());
  py::register_exception<SyntaxError>(m, "ExpressionSyntaxError", error.ptr());
  py::register_exception<UnknownIdentifierError>(m, "UnknownIdentifierError", error.ptr());
  py::register_exception<StencilError>(m, "StencilError", error.ptr());
  py::register_exception<InstabilityError>(m, "InstabilityError", error.ptr());

  py::class_<Jet>(m, "Jet")
      .def_readonly("value", &Jet::value)
      .def_readonly("gradient", &Jet::gradient)
      .def_readonly("hessian", &Jet::hessian);

  py::class_<Expression>(m, "Expression")
      .def_static("parse", &Expression::parse, py::arg("source"), py::arg("variables"))
      .def("evaluate", &Expression::evaluate)
      .def("eval_jet", &Expression::eval_jet)
      .def("to_string", &Expression::to_string)
      .def_property_readonly("variables", &Expression::variables)
      .def_property_readonly("source", &Expression::source)
      .def("__repr__", [](const Expression& e) { return "Expression(" + e.to_string() + ")"; });
  m.def("parse", &Expression::parse, py::arg("source"), py::arg("variables"));
  m.def("eval_jet", [](const Expression& e, const Vec& p) { return e.eval_jet(p); });
  m.def("indexed_names", &indexed_names);

  // pybind11 holders must be non-const; fields are immutable either way.
  using Holder = std::shared_ptr<ScalarField>;
  auto hold = [](FieldPtr f) { return std::const_pointer_cast<ScalarField>(f); };
  py::class_<ScalarField, Holder>(m, "ScalarField")
      .def_property_readonly("dim", &ScalarField::dim)
      .def("value", &ScalarField::value)
      .def("jet", &ScalarField::jet)
      .def("__repr__", &ScalarField::describe);
  m.def(
      "expression_field",
      [hold](const std::string& s, std::size_t n, const std::string& prefix) {
        return hold(make_expression_field(s, n, prefix));
      },
      py::arg("source"), py::arg("n"), py::arg("prefix") = "y");
  m.def("zero_field", [hold](std::size_t n) { return hold(make_zero_field(n)); });
  m.def(
      "quadratic_field", [hold](std::size_t n, double a) { return hold(make_quadratic_field(n, a)); },
      py::arg("n"), py::arg("alpha"));
  m.def(
      "quartic_field", [hold](std::size_t n, double c) { return hold(make_quartic_field(n, c)); },
      py::arg("n"), py::arg("coef"));
  m.def(
      "affine_field", [hold](const Vec& b, double c) { return hold(make_affine_field(b, c)); },
      py::arg("b"), py::arg("c"));

  py::class_<HJSetup>(m, "HJSetup")
      .def(py::init([](std::size_t n, double lam) {
             HJSetup s{n, lam};
             s.validate();
             return s;
           }),
           py::arg("n"), py::arg("lam"))
      .def_readonly("n", &HJSetup::n)
      .def_readonly("lam", &HJSetup::lambda)
      .def_static("preset", &HJSetup::preset)
      .def_static("paper_eq1", &HJSetup::paper_eq1)
      .def_static("paper_sol", &HJSetup::paper_sol);

  py::class_<ImplicitSolution>(m, "ImplicitSolution")
      .def(py::init([](HJSetup s, Holder phi) { return ImplicitSolution(s, phi); }), py::arg("setup"),
           py::arg("phi"))
      .def_readonly("setup", &ImplicitSolution::setup)
      .def_property_readonly("phi", [hold](const ImplicitSolution& s) { return hold(s.phi); });

  py::enum_<BranchResult::Status>(m, "Status")
      .value("CONVERGED", BranchResult::Status::Converged)
      .value("MAX_ITERATIONS", BranchResult::Status::MaxIterations)
      .value("SINGULAR_JACOBIAN", BranchResult::Status::SingularJacobian)
      .value("DOMAIN_ESCAPE", BranchResult::Status::DomainEscape)
      .value("STALLED", BranchResult::Status::Stalled);

  py::class_<BranchResult>(m, "BranchResult")
      .def_readonly("y", &BranchResult::y)
      .def_readonly("u", &BranchResult::u)
      .def_readonly("hess_u", &BranchResult::hess_u)
      .def_readonly("rank", &BranchResult::rank)
      .def_readonly("converged", &BranchResult::converged)
      .def_readonly("iterations", &BranchResult::iterations)
      .def_readonly("condition_residual_norm", &BranchResult::condition_residual_norm)
      .def_readonly("det_j", &BranchResult::det_j)
      .def_readonly("status", &BranchResult::status);

  py::enum_<BranchPolicy>(m, "BranchPolicy")
      .value("ALL", BranchPolicy::All)
      .value("MIN_U", BranchPolicy::MinU)
      .value("MAX_U", BranchPolicy::MaxU);

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("newton_tol", &SolveOptions::newton_tol)
      .def_readwrite("max_iter", &SolveOptions::max_iter)
      .def_readwrite("damping", &SolveOptions::damping)
      .def_readwrite("min_step", &SolveOptions::min_step)
      .def_readwrite("multistart_count", &SolveOptions::multistart_count)
      .def_readwrite("dedup_tol", &SolveOptions::dedup_tol)
      .def_readwrite("branch_policy", &SolveOptions::branch_policy)
      .def("set_box", [](SolveOptions& o, const Vec& lo, const Vec& hi) { o.multistart_box = {lo, hi}; });

  py::class_<BranchSet>(m, "BranchSet")
      .def_readonly("x", &BranchSet::x)
      .def_readonly("t", &BranchSet::t)
      .def_readonly("branches", &BranchSet::branches)
      .def_readonly("seeds_tried", &BranchSet::seeds_tried)
      .def("__len__", [](const BranchSet& s) { return s.branches.size(); });

  m.def("newton_solve", &newton_solve, py::arg("sol"), py::arg("x"), py::arg("t"), py::arg("y0"),
        py::arg("opts") = SolveOptions{});
  m.def("multistart_branches", &multistart_branches, py::arg("sol"), py::arg("x"), py::arg("t"),
        py::arg("opts") = SolveOptions{}, py::arg("extra_seeds") = std::vector<Vec>{});
  m.def("select_branch", [](const BranchSet& s, BranchPolicy p) { return select_branch(s, p); });

  m.def("condition_residual", &condition_residual);
  m.def("condition_jacobian", &condition_jacobian);
  m.def("u_from_y", &u_from_y);
  m.def("hessian_u", &hessian_u, py::arg("sol"), py::arg("t"), py::arg("y"),
        py::arg("tol") = kCausticTolerance);
  m.def("rank_classify", py::overload_cast<const Mat&, double>(&rank_classify), py::arg("hess_u"),
        py::arg("tol") = kRankTolerance);
  m.def("plane_wave_eval", [](const HJSetup& s, const Vec& b, double c, const Vec& x, double t) {
    return plane_wave_eval({s, b, c}, x, t);
  });

  py::class_<Lattice>(m, "Lattice")
      .def(py::init([](const Vec& lo, const Vec& hi, std::vector<std::size_t> counts) {
             Lattice l(Box{lo, hi}, std::move(counts));
             l.validate();
             return l;
           }),
           py::arg("lower"), py::arg("upper"), py::arg("counts"))
      .def_property_readonly("lower", [](const Lattice& l) { return l.box.lower; })
      .def_property_readonly("upper", [](const Lattice& l) { return l.box.upper; })
      .def_readonly("counts", &Lattice::counts)
      .def("spacing", &Lattice::spacing)
      .def("point", &Lattice::point)
      .def("__len__", &Lattice::size);

  py::class_<GridField>(m, "GridField")
      .def(py::init([](Lattice l, std::vector<double> v) {
             GridField g(std::move(l), std::move(v));
             g.validate();
             return g;
           }),
           py::arg("lattice"), py::arg("values"))
      .def_readonly("lattice", &GridField::lattice)
      .def_readonly("values", &GridField::values)
      .def("interpolate", &GridField::interpolate);
  m.def("sample_grid", [](const Lattice& l, const std::function<double(const Vec&)>& f) {
    return GridField::sample(l, f);
  });
  m.def("read_grid", py::overload_cast<const std::filesystem::path&>(&read_grid));
  m.def("write_grid", py::overload_cast<const std::filesystem::path&, const GridField&>(&write_grid));

  m.def("forward_point", [](const ScalarField& u, const Vec& x) {
    const HodographImage i = forward_point(u, x);
    return py::make_tuple(i.y, i.H);
  });
  m.def("inverse_point", [](const ScalarField& H, const Vec& y) {
    const InverseImage i = inverse_point(H, y);
    return py::make_tuple(i.x, i.u);
  });
  m.def("conjugate_grid", &conjugate_grid);
  m.def("conjugate_grid_direct", &conjugate_grid_direct);
  m.def("default_dual_box", [](const GridField& g) {
    const Box b = default_dual_box(g);
    return py::make_tuple(b.lower, b.upper);
  });
  m.def("phi_from_initial_data", py::overload_cast<const GridField&, const Lattice&>(&phi_from_initial_data));
  m.def("H_general", &H_general);

  py::enum_<Extremum>(m, "Extremum").value("MIN", Extremum::Min).value("MAX", Extremum::Max);
  m.def("hopf_bruteforce", [](const ImplicitSolution& sol, const Vec& x, double t, const Lattice& l,
                              int refine, Extremum e) {
    const HopfResult r = hopf_bruteforce(sol, x, t, l, refine, e);
    return py::make_tuple(r.u, r.y);
  });
  m.def("characteristics_solve", [](const ScalarField& g, const HJSetup& s, const std::vector<Vec>& x0,
                                    double t) {
    py::list out;
    for (const auto& r : characteristics_solve(g, s, x0, t)) out.append(py::make_tuple(r.x, r.u, r.p));
    return out;
  });
  m.def(
      "lax_friedrichs_solve",
      [](const GridField& g, const HJSetup& s, double T, double cfl) {
        LaxFriedrichsOptions o;
        o.cfl = cfl;
        return lax_friedrichs_solve(g, s, T, o);
      },
      py::arg("g"), py::arg("setup"), py::arg("T"), py::arg("cfl") = 0.4);
}
