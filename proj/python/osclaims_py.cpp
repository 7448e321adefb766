#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "osclaims/cli.hpp"
#include "osclaims/moments_closed.hpp"
#include "osclaims/quadrature.hpp"
#include "osclaims/simulator.hpp"
#include "osclaims/special_forms.hpp"

namespace py = pybind11;
using namespace osclaims;

namespace {

py::dict series_dict(const SeriesResult& r) {
    py::dict d;
    d["value"] = r.value;
    d["residual_bound"] = r.residual_bound;
    d["terms"] = r.terms;
    d["standard_error"] = r.standard_error;
    return d;
}

py::dict estimate_dict(const MomentEstimate& e) {
    py::dict d;
    d["point"] = e.point;
    d["standard_error"] = e.standard_error;
    d["lower"] = e.lower;
    d["upper"] = e.upper;
    d["replicates"] = e.replicates;
    d["seed"] = e.seed;
    d["degenerate"] = e.degenerate;
    return d;
}

QuadratureConfig quadrature_config(std::size_t nodes, double tail_epsilon, std::size_t n_cap) {
    QuadratureConfig cfg;
    cfg.nodes_per_axis = nodes;
    cfg.tail_epsilon = tail_epsilon;
    cfg.n_cap = n_cap;
    return cfg;
}

} // namespace

PYBIND11_MODULE(_osclaims, m) {
    m.doc() = "Moments of aggregate claims with waiting-time dependent claim sizes";

    // Translators run newest first, so the base class goes in first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_ArithmeticError);
    py::register_exception<InfiniteMoment>(m, "InfiniteMoment", PyExc_ArithmeticError);

    py::class_<StructureDistribution>(m, "StructureDistribution")
        .def_static("degenerate", &StructureDistribution::degenerate, py::arg("rate"))
        .def_static("gamma", &StructureDistribution::gamma, py::arg("shape"), py::arg("rate"))
        .def_static(
            "finite_atoms",
            [](const std::vector<double>& rates, const std::vector<double>& probabilities) {
                if (rates.size() != probabilities.size()) {
                    throw InvalidArgument("rates and probabilities differ in length");
                }
                std::vector<RateAtom> atoms;
                for (std::size_t k = 0; k < rates.size(); ++k) {
                    atoms.push_back({rates[k], probabilities[k]});
                }
                return StructureDistribution::finite_atoms(std::move(atoms));
            },
            py::arg("rates"), py::arg("probabilities"))
        .def_static("tabulated", &StructureDistribution::tabulated, py::arg("rates"), py::arg("density"))
        .def("mean", &StructureDistribution::mean)
        .def("variance", &StructureDistribution::variance)
        .def("__repr__", &StructureDistribution::describe);

    py::class_<SeverityLaw>(m, "SeverityLaw")
        .def_static("exponential", &SeverityLaw::exponential, py::arg("mean"))
        .def_static("gamma", &SeverityLaw::gamma, py::arg("shape"), py::arg("scale"))
        .def_static("lognormal", &SeverityLaw::lognormal, py::arg("mu"), py::arg("sigma"))
        .def_static("pareto", &SeverityLaw::pareto, py::arg("shape"), py::arg("scale"))
        .def_static("point_mass", &SeverityLaw::point_mass, py::arg("value"))
        .def("raw_moment", &SeverityLaw::raw_moment, py::arg("k"))
        .def("__repr__", &SeverityLaw::describe);

    py::class_<ProcessSpec>(m, "ProcessSpec")
        .def_static("homogeneous", &ProcessSpec::homogeneous, py::arg("rate"))
        .def_static("mixed_poisson", &ProcessSpec::mixed_poisson, py::arg("structure"))
        .def_static(
            "power_law",
            [](double scale, double exponent) {
                return ProcessSpec::non_homogeneous(CumulativeIntensity::power_law(scale, exponent));
            },
            py::arg("scale"), py::arg("exponent"))
        .def_static(
            "linear",
            [](double intercept, double slope) {
                return ProcessSpec::non_homogeneous(CumulativeIntensity::linear(intercept, slope));
            },
            py::arg("intercept"), py::arg("slope"))
        .def("mean_count", &ProcessSpec::mean_count, py::arg("t"))
        .def("__repr__", &ProcessSpec::describe);

    py::class_<DependenceModel>(m, "DependenceModel")
        .def_static("boudreault", &DependenceModel::boudreault, py::arg("beta"), py::arg("large"), py::arg("small"))
        .def_static("independent", &DependenceModel::independent, py::arg("severity"))
        .def_static("tabulated_v", &DependenceModel::tabulated_v, py::arg("v_grid"), py::arg("means"),
                    py::arg("seconds"))
        .def("__repr__", &DependenceModel::describe);

    m.def("expected_small_claims", &expected_small_claims, py::arg("t"), py::arg("lam"), py::arg("beta"));
    m.def("discounted_pair_sum", &discounted_pair_sum, py::arg("t"), py::arg("lam"), py::arg("theta"),
          py::arg("delta"), py::arg("nodes") = kPairSumNodes);
    m.def("count_pmf", &count_pmf, py::arg("process"), py::arg("t"), py::arg("n"));

    m.def("mean_closed", py::overload_cast<double, const ProcessSpec&, const DependenceModel&>(&mean_closed),
          py::arg("t"), py::arg("process"), py::arg("dependence"));
    m.def("second_moment_closed",
          py::overload_cast<double, const ProcessSpec&, const DependenceModel&>(&second_moment_closed), py::arg("t"),
          py::arg("process"), py::arg("dependence"));
    m.def(
        "variance_closed",
        [](double t, const ProcessSpec& p, const DependenceModel& d) { return variance_closed(t, p, d).variance; },
        py::arg("t"), py::arg("process"), py::arg("dependence"));

    const auto q = [](auto engine) {
        return [engine](double t, const ProcessSpec& p, const DependenceModel& d, std::size_t nodes,
                        double tail_epsilon, std::size_t n_cap) {
            return series_dict(engine(t, p, d, quadrature_config(nodes, tail_epsilon, n_cap)));
        };
    };
    const auto defaults = QuadratureConfig{};
#define OSCLAIMS_ENGINE(name, fn)                                                                                  \
    m.def(name,                                                                                                    \
          q([](double t, const ProcessSpec& p, const DependenceModel& d, const QuadratureConfig& c) {              \
              return fn(t, p, d, c);                                                                               \
          }),                                                                                                      \
          py::arg("t"), py::arg("process"), py::arg("dependence"), py::arg("nodes") = defaults.nodes_per_axis,     \
          py::arg("tail_epsilon") = defaults.tail_epsilon, py::arg("n_cap") = defaults.n_cap)
    OSCLAIMS_ENGINE("mean_os_series", mean_os_series);
    OSCLAIMS_ENGINE("mean_mixed_series", mean_mixed_series);
    OSCLAIMS_ENGINE("mean_mixed_integral", mean_mixed_integral);
    OSCLAIMS_ENGINE("second_moment_mixed_series", second_moment_mixed_series);
    OSCLAIMS_ENGINE("second_moment_mixed_integral", second_moment_mixed_integral);
#undef OSCLAIMS_ENGINE
    m.def(
        "second_moment_os_series",
        [](double t, const ProcessSpec& p, const DependenceModel& d, std::size_t nodes, double eps, std::size_t cap) {
            return series_dict(second_moment_os_series(t, p, d, quadrature_config(nodes, eps, cap)));
        },
        py::arg("t"), py::arg("process"), py::arg("dependence"), py::arg("nodes") = defaults.nodes_per_axis,
        py::arg("tail_epsilon") = defaults.tail_epsilon, py::arg("n_cap") = defaults.n_cap);

    m.def(
        "estimate_moments",
        [](const ProcessSpec& p, const DependenceModel& d, double horizon, std::size_t replicates, std::uint64_t seed,
           std::size_t threads) {
            SimulationPlan plan{p, d, horizon, replicates, seed, threads};
            MomentEstimates est;
            {
                py::gil_scoped_release release;
                est = estimate_moments(plan);
            }
            py::dict out;
            out["mean"] = estimate_dict(est.mean);
            out["second_moment"] = estimate_dict(est.second_moment);
            out["variance"] = estimate_dict(est.variance);
            return out;
        },
        py::arg("process"), py::arg("dependence"), py::arg("horizon"), py::arg("replicates") = 100000,
        py::arg("seed") = 20240101, py::arg("threads") = 0);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            const int code = run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
