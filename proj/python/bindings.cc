#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

#include "rwt/ad/tape.h"
#include "rwt/cli/app.h"
#include "rwt/cli/run_config.h"
#include "rwt/common/errors.h"
#include "rwt/io/checkpoint.h"
#include "rwt/io/dataset_io.h"
#include "rwt/model/grad_suite.h"
#include "rwt/model/resrnn.h"
#include "rwt/phantom/phantom.h"
#include "rwt/train/metrics.h"
#include "rwt/train/train.h"

namespace py = pybind11;
using namespace rwt;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array ToArray(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

// {"ids": list, "pixels": (N, F, H, W), "labels": (N, F, 6)}
py::dict DatasetDict(const std::vector<phantom::CineSequence>& data) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  const auto n = static_cast<py::ssize_t>(data.size());
  const py::ssize_t f = data[0].frames, h = data[0].height, w = data[0].width;
  Array pixels({n, f, h, w}), labels({n, f, static_cast<py::ssize_t>(phantom::kRegions)});
  py::list ids;
  double* px = pixels.mutable_data();
  double* lb = labels.mutable_data();
  for (const auto& s : data) {
    if (s.frames != f || s.height != h || s.width != w) {
      throw std::invalid_argument("subjects differ in shape");
    }
    px = std::copy(s.pixels.begin(), s.pixels.end(), px);
    lb = std::copy(s.labels.begin(), s.labels.end(), lb);
    ids.append(s.subject_id);
  }
  py::dict out;
  out["ids"] = ids;
  out["pixels"] = pixels;
  out["labels"] = labels;
  return out;
}

class Model {
 public:
  Model(const std::string& variant, std::uint64_t seed, bool toy, const std::string& init) {
    cfg_ = toy ? model::ResRNNConfig::Toy() : model::ResRNNConfig{};
    cli::ApplyVariantName(cfg_, variant);
    cfg_.Validate();
    nn::InitScheme scheme = nn::InitScheme::kUniformFanIn;
    if (init == "zero") {
      scheme = nn::InitScheme::kZero;
    } else if (init != "uniform") {
      throw std::invalid_argument("init must be 'uniform' or 'zero'");
    }
    params_ = model::InitParams(cfg_, seed, scheme);
  }
  explicit Model(io::Checkpoint ckpt) : cfg_(ckpt.config), params_(std::move(ckpt.params)) {}

  static Model Load(const std::filesystem::path& path) { return Model(io::LoadCheckpoint(path)); }
  void Save(const std::filesystem::path& path) const { io::SaveCheckpoint(path, {cfg_, params_}); }

  // frames: (F, S, S) -> (F, L)
  Array Forward(const Array& frames) const {
    const std::size_t f = cfg_.frames, s = cfg_.input_size;
    if (frames.ndim() != 3 || static_cast<std::size_t>(frames.shape(0)) != f ||
        static_cast<std::size_t>(frames.shape(1)) != s ||
        static_cast<std::size_t>(frames.shape(2)) != s) {
      throw std::invalid_argument("frames must have shape (" + std::to_string(f) + ", " +
                                  std::to_string(s) + ", " + std::to_string(s) + ")");
    }
    ad::Tensor input({f, 1, s, s}, std::vector<double>(frames.data(), frames.data() + frames.size()));
    std::vector<double> out;
    {
      py::gil_scoped_release release;
      ad::NoGradScope no_grad;
      const ad::Tensor y = model::Forward(params_, cfg_, input);
      out.assign(y.data().begin(), y.data().end());
    }
    return ToArray(out, {static_cast<py::ssize_t>(f), static_cast<py::ssize_t>(cfg_.regions)});
  }

  // Centre-crop evaluation; returns {region: (mean, std)} in normalized units.
  py::dict Evaluate(const std::filesystem::path& dataset) const {
    train::MetricsReport report;
    {
      py::gil_scoped_release release;
      report = train::Evaluate(params_, cfg_, io::ReadDataset(dataset));
    }
    py::dict out;
    for (const auto& row : report.rows) out[py::str(row.name)] = py::make_tuple(row.mean, row.std);
    return out;
  }

  std::string Variant() const { return cli::ResolvedVariantName(cfg_); }
  std::string Config() const { return io::ModelConfigText(cfg_); }
  std::size_t NumParams() const {
    std::size_t n = 0;
    for (const auto& p : params_.Named()) n += p.tensor.size();
    return n;
  }

 private:
  model::ResRNNConfig cfg_;
  model::ResRNNParams params_;
};

}  // namespace

PYBIND11_MODULE(_rwtnet, m) {
  m.doc() = "Regional wall thickness estimation with residual circle RNNs";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::RunCli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the rwt command line in-process; returns (exit_code, stdout, stderr).");

  m.def(
      "generate_dataset",
      [](std::size_t subjects, std::uint64_t seed) {
        std::vector<phantom::CineSequence> data;
        {
          py::gil_scoped_release release;
          data = phantom::GenerateDataset(subjects, seed);
        }
        return DatasetDict(data);
      },
      py::arg("subjects"), py::arg("seed") = 1,
      "Phantom cine sequences with default ranges as numpy arrays.");

  m.def(
      "read_dataset", [](const std::filesystem::path& p) { return DatasetDict(io::ReadDataset(p)); },
      py::arg("path"));

  m.def(
      "learning_rate",
      [](int iteration, double base_lr, double gamma, int step_size) {
        train::TrainConfig cfg;
        cfg.base_lr = base_lr;
        cfg.gamma = gamma;
        cfg.step_size = step_size;
        return train::LearningRate(cfg, iteration);
      },
      py::arg("iteration"), py::arg("base_lr") = 0.05, py::arg("gamma") = 0.5,
      py::arg("step_size") = 2500);

  m.def(
      "grad_check",
      [](std::uint64_t seed) {
        std::vector<model::ModelGradReport> reports;
        {
          py::gil_scoped_release release;
          reports = model::ModelGradCheck(model::ResRNNConfig::Toy(), seed);
        }
        py::dict out;
        for (const auto& r : reports) out[py::str(r.variant)] = r.result.max_rel_error;
        return out;
      },
      py::arg("seed") = 1, "Max relative finite-difference error per variant on the toy model.");

  m.attr("VARIANTS") = py::make_tuple("cnn", "rnn-plain", "rnn-circle", "resrnn-plain",
                                      "resrnn-circle", "trnn-plain", "trnn-circle");

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&, std::uint64_t, bool, const std::string&>(),
           py::arg("variant") = "resrnn-circle", py::arg("seed") = 0, py::arg("toy") = false,
           py::arg("init") = "uniform")
      .def_static("load", &Model::Load, py::arg("path"))
      .def("save", &Model::Save, py::arg("path"))
      .def("forward", &Model::Forward, py::arg("frames"))
      .def("evaluate", &Model::Evaluate, py::arg("dataset"))
      .def_property_readonly("variant", &Model::Variant)
      .def_property_readonly("config", &Model::Config)
      .def_property_readonly("num_params", &Model::NumParams);
}
