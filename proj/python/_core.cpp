#include <map>
#include <optional>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sinn/commands.hpp"
#include "sinn/data.hpp"
#include "sinn/errors.hpp"
#include "sinn/gradcheck.hpp"
#include "sinn/metrics.hpp"
#include "sinn/ode.hpp"
#include "sinn/sim.hpp"

namespace py = pybind11;
using namespace sinn;

namespace {

py::list posts_to_list(const OpinionDataset& d) {
  py::list out;
  for (const auto& p : d.posts()) out.append(py::make_tuple(p.user, p.time, p.label));
  return out;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["macro_f1"] = m.macro_f1;
  py::list per_class;
  for (const auto& c : m.per_class) {
    py::dict e;
    e["precision"] = c.precision;
    e["recall"] = c.recall;
    e["f1"] = c.f1;
    e["support"] = c.support;
    per_class.append(e);
  }
  d["per_class"] = per_class;
  d["confusion"] = m.confusion;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Opinion-dynamics simulators, metrics and the training command line";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("discretize_opinion", &discretize_opinion, py::arg("x"), py::arg("num_classes") = 5);
  m.def("label_to_continuous", &label_to_continuous, py::arg("label"), py::arg("num_classes"));

  py::class_<SbcmGenConfig>(m, "SbcmGenConfig")
      .def(py::init<>())
      .def_readwrite("num_users", &SbcmGenConfig::num_users)
      .def_readwrite("num_steps", &SbcmGenConfig::num_steps)
      .def_readwrite("initiators_per_step", &SbcmGenConfig::initiators_per_step)
      .def_readwrite("mu", &SbcmGenConfig::mu)
      .def_readwrite("rho", &SbcmGenConfig::rho)
      .def_readwrite("init_low", &SbcmGenConfig::init_low)
      .def_readwrite("init_high", &SbcmGenConfig::init_high)
      .def_readwrite("seed", &SbcmGenConfig::seed);
  m.def("sbcm_preset", [](const std::string& name) { return sbcm_preset(name); });
  m.def("preset_names", &sbcm_preset_names);

  m.def(
      "simulate_sbcm",
      [](const SbcmGenConfig& c) {
        auto run = generate_sbcm_dataset(c);
        py::dict d;
        d["trajectory"] = run.trajectory;
        d["posts"] = posts_to_list(run.dataset);
        d["num_users"] = run.dataset.num_users();
        d["num_classes"] = run.dataset.num_classes();
        return d;
      },
      py::arg("config"), "Agent-based run: users x steps trajectory and labeled posts.");

  m.def("population_std", [](const std::vector<double>& x) { return population_std(x); });
  m.def(
      "histogram_clusters",
      [](const std::vector<double>& x, double width) {
        const auto c = histogram_clusters(x, width);
        return py::make_tuple(c.count, c.max_gap, c.centers);
      },
      py::arg("opinions"), py::arg("bin_width") = 0.1, "(count, widest gap, centers) of occupied histogram runs.");

  m.def(
      "compute_metrics",
      [](const std::vector<int>& truth, const std::vector<int>& pred, int num_classes, bool include_absent) {
        return metrics_dict(compute_metrics(truth, pred, num_classes, include_absent));
      },
      py::arg("truth"), py::arg("pred"), py::arg("num_classes"), py::arg("include_absent_classes") = false);

  m.def(
      "gumbel_softmax_sample",
      [](const std::vector<double>& p, double tau, std::uint64_t seed) {
        Rng rng(seed);
        return gumbel_softmax_sample(p, tau, rng);
      },
      py::arg("p"), py::arg("tau"), py::arg("seed") = 0);

  m.def(
      "gradcheck",
      [](std::uint64_t seed, std::size_t cases) {
        GradcheckReport r;
        {
          py::gil_scoped_release release;
          r = run_gradcheck(seed, cases);
        }
        return py::make_tuple(r.pass(), r.text());
      },
      py::arg("seed") = 0, py::arg("cases") = 1, "(passed, report text)");

  m.def(
      "run_command",
      [](const std::string& name, const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
         const std::string& preset, const std::vector<std::string>& methods, const std::vector<std::string>& axes,
         std::optional<std::size_t> jobs, std::size_t cases, const std::string& checkpoint, const std::string& run) {
        CommandOptions opt;
        opt.config = config;
        opt.out = out;
        opt.seed = seed;
        opt.preset = preset;
        opt.methods = methods;
        opt.axes = axes;
        opt.jobs = jobs;
        opt.cases = cases;
        opt.checkpoint = checkpoint;
        opt.run = run;
        static const std::map<std::string, int (*)(const CommandOptions&, std::ostream&)> table{
            {"simulate", cmd_simulate}, {"train", cmd_train},         {"evaluate", cmd_evaluate},
            {"baseline", cmd_baseline}, {"gridsearch", cmd_gridsearch}, {"ablate", cmd_ablate},
            {"gradcheck", cmd_gradcheck}, {"report", cmd_report}};
        auto it = table.find(name);
        if (it == table.end()) throw InputError("unknown command \"" + name + "\"");
        std::ostringstream text;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = it->second(opt, text);
        }
        return py::make_tuple(code, text.str());
      },
      py::arg("name"), py::arg("config") = "", py::arg("out") = "", py::arg("seed") = py::none(),
      py::arg("preset") = "", py::arg("methods") = std::vector<std::string>{},
      py::arg("axes") = std::vector<std::string>{}, py::arg("jobs") = py::none(), py::arg("cases") = 100,
      py::arg("checkpoint") = "", py::arg("run") = "",
      "Runs one command-line command in-process and returns (exit code, printed text).");
}
