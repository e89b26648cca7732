#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "thermobeat/config.hpp"
#include "thermobeat/correlate.hpp"
#include "thermobeat/errors.hpp"
#include "thermobeat/estimate.hpp"
#include "thermobeat/physics.hpp"
#include "thermobeat/pipeline.hpp"

namespace py = pybind11;
using namespace thermobeat;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

detect::TimestampStream to_stream(py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> ticks,
                                  double duration, int channel) {
  detect::TimestampStream s;
  s.channel = channel;
  s.times.assign(ticks.data(), ticks.data() + ticks.size());
  s.duration = duration;
  return s;
}

G2Curve curve_from(py::array_t<double> tau, py::array_t<double> values, py::array_t<double> sigma,
                   double bin_width) {
  if (tau.size() != values.size() || tau.size() != sigma.size()) throw DataError("tau, values and sigma differ in length");
  G2Curve g;
  g.tau.assign(tau.data(), tau.data() + tau.size());
  g.values.assign(values.data(), values.data() + values.size());
  g.sigma.assign(sigma.data(), sigma.data() + sigma.size());
  g.bin_width = bin_width;
  return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Photon correlation simulator and beat estimator";
  m.attr("__version__") = THERMOBEAT_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<StatisticsError>(m, "StatisticsError", base.ptr());
  py::register_exception<EstimationError>(m, "EstimationError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());

  m.def("beat_frequency", &physics::beat_frequency, py::arg("detuning"), py::arg("theta"));
  m.def("doppler_sigma", &physics::doppler_sigma, py::arg("temperature"), py::arg("mass"), py::arg("wavelength"));
  m.def("sigma_forward", &physics::sigma_forward, py::arg("sigma_doppler"), py::arg("theta"));
  m.def("sigma_backward", &physics::sigma_backward, py::arg("sigma_doppler"), py::arg("theta"), py::arg("gamma"));
  m.def("g20_from_r", &physics::g20_from_r, py::arg("r"));
  m.def("r_from_g20", &physics::r_from_g20, py::arg("g2_zero"));
  m.def("visibility_from_ratio", &physics::visibility_from_ratio, py::arg("rho"));

  py::class_<config::RunConfig>(m, "RunConfig")
      .def_property_readonly("detuning", [](const config::RunConfig& c) { return c.experiment.detuning; })
      .def_property_readonly("observation_angle", [](const config::RunConfig& c) { return c.experiment.observation_angle; })
      .def_property("seed", [](const config::RunConfig& c) { return c.seed; },
                    [](config::RunConfig& c, std::uint64_t s) { c.seed = s; })
      .def_property("duration", [](const config::RunConfig& c) { return c.duration; },
                    [](config::RunConfig& c, double d) {
                      c.duration = d;
                      c.validate();
                    })
      .def_readonly("bin_width", &config::RunConfig::bin_width)
      .def_readonly("tau_max", &config::RunConfig::tau_max)
      .def("canonical_text", [](const config::RunConfig& c) { return config::canonical_text(c); })
      .def("config_hash", [](const config::RunConfig& c) { return config::config_hash(c); });
  m.def("parse_config", &config::parse_config, py::arg("text"));
  m.def("load_config", &config::load_config, py::arg("path"));

  py::class_<G2Curve>(m, "G2Curve")
      .def(py::init(&curve_from), py::arg("tau"), py::arg("values"), py::arg("sigma"), py::arg("bin_width"))
      .def_property_readonly("tau", [](const G2Curve& g) { return to_array(g.tau); })
      .def_property_readonly("values", [](const G2Curve& g) { return to_array(g.values); })
      .def_property_readonly("sigma", [](const G2Curve& g) { return to_array(g.sigma); })
      .def_property_readonly("counts", [](const G2Curve& g) { return to_array(g.counts); })
      .def_readonly("bin_width", &G2Curve::bin_width)
      .def_readonly("total_coincidences", &G2Curve::total_coincidences)
      .def_readonly("rates", &G2Curve::rates)
      .def_readonly("duration", &G2Curve::duration)
      .def("__len__", &G2Curve::size);

  py::class_<estimate::BeatEstimate>(m, "BeatEstimate")
      .def_readonly("f_mod", &estimate::BeatEstimate::f_mod)
      .def_readonly("sigma_f", &estimate::BeatEstimate::sigma_f)
      .def_readonly("detuning_abs", &estimate::BeatEstimate::detuning_abs)
      .def_readonly("spectral_resolution", &estimate::BeatEstimate::spectral_resolution)
      .def_readonly("peak_magnitude", &estimate::BeatEstimate::peak_magnitude)
      .def_readonly("noise_floor", &estimate::BeatEstimate::noise_floor)
      .def_readonly("window_half_width", &estimate::BeatEstimate::window_half_width)
      .def_readonly("method", &estimate::BeatEstimate::method);

  py::class_<estimate::InterferenceFit>(m, "InterferenceFit")
      .def_readonly("rho", &estimate::InterferenceFit::rho)
      .def_readonly("sigma_forward", &estimate::InterferenceFit::sigma_forward)
      .def_readonly("sigma_backward", &estimate::InterferenceFit::sigma_backward)
      .def_readonly("f_mod", &estimate::InterferenceFit::f_mod)
      .def_readonly("visibility", &estimate::InterferenceFit::visibility)
      .def_readonly("g2_zero", &estimate::InterferenceFit::g2_zero)
      .def_readonly("r", &estimate::InterferenceFit::r)
      .def_readonly("chi2", &estimate::InterferenceFit::chi2)
      .def_readonly("dof", &estimate::InterferenceFit::dof);

  m.def("predict", &pipeline::predict, py::arg("config"), "Analytic g2 on the configured lag grid.");
  m.def("simulate",
        [](const config::RunConfig& c) {
          pipeline::Simulation s = pipeline::simulate(c);
          return py::make_tuple(to_array(s.a.times), to_array(s.b.times));
        },
        py::arg("config"), "Detection ticks (ps) of both channels.");
  m.def("simulate_g2", &pipeline::simulate_g2, py::arg("config"));
  m.def("correlate",
        [](const config::RunConfig& c, py::array_t<std::int64_t> a, py::array_t<std::int64_t> b, double duration) {
          return pipeline::correlate(c, to_stream(a, duration, 0), to_stream(b, duration, 1));
        },
        py::arg("config"), py::arg("a"), py::arg("b"), py::arg("duration"));
  m.def("histogram",
        [](py::array_t<std::int64_t> a, py::array_t<std::int64_t> b, double duration, double bin_width,
           double tau_max, unsigned chunks) {
          auto h = correlate::coincidence_histogram(to_stream(a, duration, 0), to_stream(b, duration, 1), bin_width,
                                                    tau_max, {chunks, 1});
          return to_array(h.counts);
        },
        py::arg("a"), py::arg("b"), py::arg("duration"), py::arg("bin_width"), py::arg("tau_max"),
        py::arg("chunks") = 1u, "Raw coincidence counts of b - a lags.");
  m.def("estimate_beat",
        [](const G2Curve& g2, const config::RunConfig* c, const std::string& window, const std::string& refine) {
          estimate::BeatOptions o = c ? c->beat_options() : estimate::BeatOptions{};
          if (window == "adaptive") o.window = estimate::WindowMode::adaptive;
          else if (window == "full") o.window = estimate::WindowMode::full;
          else if (window == "fixed") o.window = estimate::WindowMode::fixed;
          else if (!window.empty()) throw ConfigError("window must be adaptive, full or fixed");
          if (refine == "fit") o.refine = estimate::Refine::fit;
          else if (refine == "none") o.refine = estimate::Refine::none;
          else if (!refine.empty()) throw ConfigError("refine must be fit or none");
          return estimate::estimate_beat(g2, o);
        },
        py::arg("g2"), py::arg("config") = nullptr, py::arg("window") = "", py::arg("refine") = "");
  m.def("fit_interference",
        [](const G2Curve& g2, const config::RunConfig& c) { return estimate::fit_interference(g2, c.experiment); },
        py::arg("g2"), py::arg("config"));
  m.def("run_pipeline",
        [](const config::RunConfig& c, const std::string& command, const std::string& out, const std::string& input) {
          return pipeline::run_pipeline(c, pipeline::parse_command(command), {out, input});
        },
        py::arg("config"), py::arg("command"), py::arg("output_dir"), py::arg("input") = "",
        "Runs a command, writing its artifacts and manifest.json; returns the paths.");
}
