#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sdestab/coefficients.hpp"
#include "sdestab/drift_removal.hpp"
#include "sdestab/errors.hpp"
#include "sdestab/harness.hpp"
#include "sdestab/noise.hpp"
#include "sdestab/rate_analysis.hpp"
#include "sdestab/report.hpp"
#include "sdestab/sde_engine.hpp"
#include "sdestab/version.hpp"
#include "sdestab/yamada_watanabe.hpp"

namespace py = pybind11;
using namespace sdestab;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  // shape + source pointer: copies into a fresh owning array
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

SimSpec make_simspec(const CoefficientFamily& family, double x0, double T,
                     double h, const std::string& driver, double alpha) {
  SimSpec spec;
  spec.diffusion = family.limit_sigma;
  spec.drift = family.limit_b;
  spec.x0 = x0;
  spec.horizon_T = T;
  spec.step_h = h;
  if (driver == "STABLE") {
    spec.driver = Driver::STABLE;
    spec.alpha = alpha;
  } else if (driver == "WIENER") {
    spec.driver = Driver::WIENER;
  } else {
    throw InvalidInput("driver must be WIENER or STABLE");
  }
  spec.steps();
  return spec;
}

py::dict report_dict(const ConditionReport& r) {
  py::dict d;
  d["pass"] = r.pass;
  d["alpha"] = r.alpha;
  d["worst_violation"] = r.worst_violation;
  d["witness"] = py::make_tuple(r.witness_x, r.witness_y);
  d["ellipticity_ok"] = r.ellipticity_ok;
  d["min_eval"] = r.min_eval;
  d["monotone_ok"] = r.monotone_ok;
  d["tol"] = r.tol;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sdestab, m) {
  m.doc() = "strong-convergence laboratory for SDE stability problems";
  m.attr("__version__") = kVersion;

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ConditionCheckFailure>(m, "ConditionCheckFailure",
                                                PyExc_RuntimeError);

  // ---- coefficients -------------------------------------------------------
  py::class_<Coefficient>(m, "Coefficient")
      .def("__call__",
           [](const Coefficient& c, double x) { return c.eval(x); })
      .def("dominator",
           [](const Coefficient& c, double x) {
             return c.dominator_f ? c.dominator_f(x) : 0.0;
           })
      .def_readonly("epsilon", &Coefficient::epsilon)
      .def_readonly("sup_bound", &Coefficient::sup_bound)
      .def_readonly("discontinuity_points",
                    &Coefficient::discontinuity_points);

  py::class_<CoefficientFamily>(m, "Family")
      .def_readonly("name", &CoefficientFamily::name)
      .def_readonly("rate_constant_C0", &CoefficientFamily::rate_constant_C0)
      .def_property_readonly(
          "limit", [](const CoefficientFamily& f) { return f.limit_sigma; })
      .def("member",
           [](const CoefficientFamily& f, std::int64_t n) {
             return f.member(n);
           })
      .def("distance",
           [](const CoefficientFamily& f, std::int64_t n) {
             return coefficient_distance(f.member(n), f.limit_sigma,
                                         f.distance_mode, f.domain);
           })
      .def("check_limit",
           [](const CoefficientFamily& f, double alpha) {
             auto grid = default_check_grid(f.limit_sigma, f.domain);
             return report_dict(alpha == 2.0
                                    ? check_nakao_legall(f.limit_sigma, grid)
                                    : check_belfadli_ouknine(f.limit_sigma,
                                                             alpha, grid));
           },
           py::arg("alpha") = 2.0)
      .def("check_member",
           [](const CoefficientFamily& f, std::int64_t n, double alpha) {
             auto coef = f.member(n);
             auto grid = default_check_grid(coef, f.domain);
             return report_dict(alpha == 2.0
                                    ? check_nakao_legall(coef, grid)
                                    : check_belfadli_ouknine(coef, alpha,
                                                             grid));
           },
           py::arg("n"), py::arg("alpha") = 2.0)
      .def("fit_rate", [](const CoefficientFamily& f,
                          const std::vector<std::int64_t>& ns) {
        auto fit = fit_family_rate(f, ns);
        py::dict d;
        d["C"] = fit.C;
        d["q"] = fit.q;
        d["r_squared"] = fit.r_squared;
        return d;
      });

  m.def("mollified_jump_family", &mollified_jump_family, py::arg("low"),
        py::arg("high"), py::arg("jump_at") = 0.0);
  m.def("constant_shift_family", &constant_shift_family, py::arg("sigma0"));
  m.def("step_coefficient", &step_coefficient, py::arg("height"),
        py::arg("lo"), py::arg("hi"));
  m.def("with_drift", &with_drift, py::arg("family"), py::arg("drift"));

  // ---- regularization -----------------------------------------------------
  m.def("yw_a", &yw_a, py::arg("m"));
  m.def("select_level", &select_level, py::arg("n"));
  m.def("k_alpha", &k_alpha, py::arg("alpha"));
  m.def("theoretical_bound", &theoretical_bound, py::arg("n"), py::arg("m"),
        py::arg("c_jy"), py::arg("c_jsigma"));

  py::class_<YWLevel>(m, "YWLevel")
      .def(py::init<int, double>(), py::arg("m"),
           py::arg("bump_plateau_fraction") = 0.25)
      .def_property_readonly("m", &YWLevel::m)
      .def_property_readonly("a", &YWLevel::a)
      .def_property_readonly("a_prev", &YWLevel::a_prev)
      .def("phi", &YWLevel::phi, py::arg("x"))
      .def("phi_mass", &YWLevel::phi_mass)
      .def("u", &YWLevel::u, py::arg("x"))
      .def("u_prime", &YWLevel::u_prime, py::arg("x"))
      .def("v", &YWLevel::v, py::arg("alpha"), py::arg("x"));

  // ---- noise ---------------------------------------------------------------
  m.def(
      "brownian_increments",
      [](double h, std::size_t steps, std::uint64_t seed,
         std::uint32_t replica) {
        return to_array(brownian_increments(h, steps, seed, replica)
                            .increments);
      },
      py::arg("h"), py::arg("steps"), py::arg("seed"),
      py::arg("replica") = 0);
  m.def(
      "stable_increments",
      [](double alpha, double h, std::size_t steps, std::uint64_t seed,
         std::uint32_t replica) {
        return to_array(
            stable_increments(alpha, h, steps, seed, replica).increments);
      },
      py::arg("alpha"), py::arg("h"), py::arg("steps"), py::arg("seed"),
      py::arg("replica") = 0);
  m.def(
      "empirical_cf",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> xs,
         double u) {
        return empirical_cf(
            std::span<const double>(xs.data(),
                                    static_cast<std::size_t>(xs.size())),
            u);
      },
      py::arg("samples"), py::arg("u"));

  // ---- rate analysis -------------------------------------------------------
  m.def(
      "fit_log_rate",
      [](const std::vector<std::tuple<std::int64_t, double, double>>& pts,
         const std::string& model) {
        std::vector<RatePoint> rp;
        for (const auto& [n, v, ci] : pts) rp.push_back({n, v, ci});
        auto fit = fit_log_rate(rp, model == "POWER" ? RateModel::POWER
                                                     : RateModel::LOG_POWER);
        py::dict d;
        d["model"] = model == "POWER" ? "POWER" : "LOG_POWER";
        d["C"] = fit.C;
        d["q"] = fit.q;
        d["r_squared"] = fit.r_squared;
        return d;
      },
      py::arg("points"), py::arg("model") = "LOG_POWER");
  m.def(
      "bound_verdict",
      [](const std::vector<std::tuple<std::int64_t, double, double>>& pts,
         double q_claimed, double safety) {
        std::vector<RatePoint> rp;
        for (const auto& [n, v, ci] : pts) rp.push_back({n, v, ci});
        auto v = bound_verdict(rp, q_claimed, safety);
        py::dict d;
        d["status"] = v.status == Verdict::VIOLATED ? "VIOLATED"
                                                    : "CONSISTENT";
        d["witness_n"] = v.witness_n;
        d["C_hat"] = v.c_hat;
        d["safety"] = v.safety;
        return d;
      },
      py::arg("points"), py::arg("q_claimed"), py::arg("safety") = 1.5);
  m.def("supnorm_exponent", &supnorm_exponent, py::arg("p"));
  m.def("stable_exponent", &stable_exponent, py::arg("alpha"));

  // ---- simulation ----------------------------------------------------------
  py::class_<ErrorEstimate>(m, "ErrorEstimate")
      .def_readonly("n", &ErrorEstimate::n)
      .def_readonly("p", &ErrorEstimate::p)
      .def_readonly("terminal_error", &ErrorEstimate::terminal_error)
      .def_readonly("terminal_ci", &ErrorEstimate::terminal_ci)
      .def_readonly("sup_error", &ErrorEstimate::sup_error)
      .def_readonly("sup_ci", &ErrorEstimate::sup_ci)
      .def_readonly("replicas", &ErrorEstimate::replicas)
      .def_readonly("h", &ErrorEstimate::h)
      .def_readonly("seed", &ErrorEstimate::seed)
      .def("__repr__", [](const ErrorEstimate& e) {
        return "ErrorEstimate(n=" + std::to_string(e.n) +
               ", terminal_error=" + format_double(e.terminal_error) + ")";
      });

  m.def(
      "estimate_strong_error",
      [](const CoefficientFamily& family,
         const std::vector<std::int64_t>& n_list, double p,
         std::size_t replicas, double x0, double T, double h,
         const std::string& driver, double alpha, std::uint64_t seed,
         int threads) {
        const SimSpec spec = make_simspec(family, x0, T, h, driver, alpha);
        ExecPolicy exec{threads};
        py::gil_scoped_release release;
        return estimate_strong_error(family, n_list, p, replicas, spec, seed,
                                     exec);
      },
      py::arg("family"), py::arg("n_list"), py::arg("p") = 1.0,
      py::arg("replicas") = 1000, py::arg("x0") = 0.5, py::arg("T") = 1.0,
      py::arg("h") = 1.0 / 4096, py::arg("driver") = "WIENER",
      py::arg("alpha") = 0.0, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "coupled_paths",
      [](const CoefficientFamily& family, std::int64_t n, double x0, double T,
         double h, const std::string& driver, double alpha,
         std::uint64_t seed, std::uint32_t replica) {
        const SimSpec limit = make_simspec(family, x0, T, h, driver, alpha);
        SimSpec member = limit;
        member.diffusion = family.member(n);
        if (family.member_b) member.drift = family.member_b(n);
        const auto pair =
            coupled_simulate(limit, member, NoiseKey{seed, replica, 0});
        py::dict d;
        d["t"] = to_array(pair.grid);
        d["x"] = to_array(pair.x_path);
        d["xn"] = to_array(pair.xn_path);
        d["y"] = to_array(pair.y_path);
        return d;
      },
      py::arg("family"), py::arg("n"), py::arg("x0") = 0.5,
      py::arg("T") = 1.0, py::arg("h") = 1.0 / 4096,
      py::arg("driver") = "WIENER", py::arg("alpha") = 0.0,
      py::arg("seed") = 0, py::arg("replica") = 0);

  // ---- drift removal -------------------------------------------------------
  py::class_<ScaleFunction>(m, "ScaleFunction")
      .def(py::init([](const CoefficientFamily& family, double box_lo,
                       double box_hi) {
             ScaleOptions opts;
             opts.box_lo = box_lo;
             opts.box_hi = box_hi;
             return ScaleFunction(family.limit_b, family.limit_sigma,
                                  family.domain, opts);
           }),
           py::arg("family"), py::arg("box_lo") = -8.0,
           py::arg("box_hi") = 8.0)
      .def("value", &ScaleFunction::value, py::arg("x"))
      .def("prime", &ScaleFunction::prime, py::arg("x"))
      .def("inverse", &ScaleFunction::inverse, py::arg("y"))
      .def("transformed_sigma", &ScaleFunction::transformed_sigma,
           py::arg("y"))
      .def_property_readonly("is_identity", &ScaleFunction::is_identity)
      .def_property_readonly("c_s1", &ScaleFunction::c_s1)
      .def_property_readonly("c_s2", &ScaleFunction::c_s2)
      .def_property_readonly("epsilon_bar", &ScaleFunction::epsilon_bar);

  // ---- CLI passthrough -----------------------------------------------------
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return run_cli(args);
      },
      py::arg("args"));
}
