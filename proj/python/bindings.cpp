#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "trimsum/cli.hpp"
#include "trimsum/conditions.hpp"
#include "trimsum/dist.hpp"
#include "trimsum/edgeworth.hpp"
#include "trimsum/mc.hpp"
#include "trimsum/rate.hpp"
#include "trimsum/trim.hpp"

namespace py = pybind11;
using namespace trimsum;

namespace {

dist::DistributionModel model_from(const std::string& id,
                                   const std::map<std::string, double>& params) {
  return dist::DistributionModel::from_spec(dist::ModelSpec{id, params});
}

py::dict terms_dict(const edgeworth::ExpansionTerms& t) {
  py::dict d;
  d["n"] = t.n;
  d["k"] = t.trim.k;
  d["m"] = t.trim.m;
  d["lambda1"] = t.lambda1;
  d["lambda2"] = t.lambda2;
  d["b_n"] = t.b_n;
  d["sigma_w"] = t.sigma_w;
  d["mu_trunc"] = t.mu_trunc;
  d["mu_w"] = t.mu_w;
  d["q_alpha"] = t.q_alpha;
  d["q_beta"] = t.q_beta;
  return d;
}

py::dict interval_dict(const cli::Interval& iv) {
  py::dict d;
  d["lower"] = iv.lower;
  d["upper"] = iv.upper;
  d["x_low"] = iv.x_low;
  d["x_high"] = iv.x_high;
  d["fallback"] = iv.fallback;
  return d;
}

}  // namespace

PYBIND11_MODULE(_trimsum, m) {
  m.doc() = "Edgeworth-corrected approximations for slightly trimmed sums";

  static py::handle error = py::exception<Error>(m, "TrimsumError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<dist::DistributionModel>(m, "Model")
      .def(py::init(&model_from), py::arg("id"),
           py::arg("params") = std::map<std::string, double>{})
      .def_property_readonly("id", &dist::DistributionModel::id)
      .def_property_readonly("tail_index", &dist::DistributionModel::tail_index)
      .def_property_readonly("symmetric", &dist::DistributionModel::symmetric)
      .def("cdf", &dist::DistributionModel::cdf)
      .def("pdf", &dist::DistributionModel::pdf)
      .def("quantile", [](const dist::DistributionModel& md, double u) {
        return md.eval(dist::Which::quantile, u);
      })
      .def("sample", [](const dist::DistributionModel& md, std::size_t n,
                        std::uint64_t seed) { return dist::sample_iid(md, n, seed); },
           py::arg("n"), py::arg("seed"))
      .def("truncated_mean", [](const dist::DistributionModel& md, double u,
                                double v) { return dist::truncated_mean(md, u, v); })
      .def("winsorized_variance",
           [](const dist::DistributionModel& md, double u, double v) {
             return dist::winsorized_moments(md, u, v).winsor_var;
           });

  py::class_<edgeworth::ExpansionTerms>(m, "ExpansionTerms")
      .def_readonly("lambda1", &edgeworth::ExpansionTerms::lambda1)
      .def_readonly("lambda2", &edgeworth::ExpansionTerms::lambda2)
      .def_readonly("b_n", &edgeworth::ExpansionTerms::b_n)
      .def_readonly("sigma_w", &edgeworth::ExpansionTerms::sigma_w)
      .def_readonly("mu_trunc", &edgeworth::ExpansionTerms::mu_trunc)
      .def_readonly("q_alpha", &edgeworth::ExpansionTerms::q_alpha)
      .def_readonly("q_beta", &edgeworth::ExpansionTerms::q_beta)
      .def("as_dict", &terms_dict)
      .def("gn", &edgeworth::gn_eval)
      .def("hn", &edgeworth::hn_eval)
      .def("invert", [](const edgeworth::ExpansionTerms& t, double q) {
        const auto inv = edgeworth::invert_expansion(t, q);
        return py::make_tuple(inv.x, inv.fallback);
      });

  m.def("expansion_terms",
        [](const dist::DistributionModel& md, std::size_t n, std::size_t k,
           std::size_t mm) {
          return edgeworth::expansion_terms(md, trim::make_counts(n, k, mm));
        },
        py::arg("model"), py::arg("n"), py::arg("k"), py::arg("m"));
  m.def("terms_from_ratios", &edgeworth::terms_from_ratios, py::arg("n"),
        py::arg("lambda1"), py::arg("lambda2"), py::arg("bias_ratio"));

  m.def("trimmed_sum", [](std::vector<double> x, std::size_t k, std::size_t mm) {
    return trim::trimmed_sum(trim::SortedSample(std::move(x)), k, mm);
  });
  m.def("plugin_moments", [](std::vector<double> x, std::size_t k, std::size_t mm) {
    const auto p = trim::plugin_moments(trim::SortedSample(std::move(x)), k, mm);
    return py::make_tuple(p.mean, p.variance);
  });

  m.def("ks_distance", [](std::vector<double> x, std::function<double(double)> f) {
    return mc::ks_distance(mc::EmpiricalCdf(std::move(x)), f);
  });
  m.def("fit_rate", [](const std::vector<std::pair<double, double>>& pts) {
    const auto f = mc::fit_rate(pts);
    py::dict d;
    d["slope"] = f.slope;
    d["intercept"] = f.intercept;
    d["r_squared"] = f.r_squared;
    d["stderr"] = f.stderr_slope;
    return d;
  });

  m.def("psi_sup",
        [](const dist::DistributionModel& md, std::size_t n, std::size_t k,
           std::size_t mm, const std::string& side, const std::string& h,
           double B) {
          const auto s = side == "upper" ? conditions::Side::upper
                                         : conditions::Side::lower;
          conditions::HKind kind = conditions::HKind::inv_f;
          if (h == "x") kind = conditions::HKind::x;
          else if (h == "x_over_f") kind = conditions::HKind::x_over_f;
          else if (h != "inv_f")
            fail(ErrorKind::configuration, "unknown h kind '" + h + "'");
          return conditions::psi_sup(md, trim::make_counts(n, k, mm), s, kind, B);
        },
        py::arg("model"), py::arg("n"), py::arg("k"), py::arg("m"),
        py::arg("side"), py::arg("h"), py::arg("B"));

  m.def("normalize_config", [](const std::string& text) {
    return cli::serialize_config(cli::parse_config(text));
  });

  m.def("ci",
        [](std::vector<double> values, double alpha, double beta, double level) {
          const auto r = cli::ci_from_values(std::move(values), alpha, beta, level);
          py::dict d;
          d["n"] = r.n;
          d["k"] = r.k;
          d["m"] = r.m;
          d["t_n"] = r.t_n;
          d["plug_var"] = r.plug_var;
          d["lambda1"] = r.lambda1;
          d["lambda2"] = r.lambda2;
          d["bias_ratio"] = r.bias_ratio;
          d["normal"] = interval_dict(r.normal);
          d["corrected"] = interval_dict(r.corrected);
          return d;
        },
        py::arg("values"), py::arg("alpha"), py::arg("beta"), py::arg("level"));

  m.def("run", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = cli::run_command(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Run a CLI command; returns (exit_code, stdout, stderr).");
}
