#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "photonas/arch_code.hpp"
#include "photonas/cli.hpp"
#include "photonas/errors.hpp"
#include "photonas/graph.hpp"
#include "photonas/io.hpp"
#include "photonas/metrics.hpp"
#include "photonas/train.hpp"
#include "photonas/transfer.hpp"

namespace py = pybind11;
using namespace photonas;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  FloatArray a(shape);
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

transfer::TransferConfig transfer_config(float epsilon, float blend, const std::string& kind) {
  transfer::TransferConfig c;
  c.epsilon = epsilon;
  c.blend = blend;
  c.kind = transfer::parse_module_kind(kind);
  c.validate();
  return c;
}

py::dict weights_to_dict(const WeightMap& w) {
  py::dict d;
  for (const auto& [name, t] : w) d[py::str(name)] = to_array(t);
  return d;
}

WeightMap dict_to_weights(const py::dict& d) {
  WeightMap w;
  for (const auto& [k, v] : d) w[py::cast<std::string>(k)] = to_tensor(py::cast<FloatArray>(v));
  return w;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Photorealistic style transfer engine and architecture search";

  auto& base = py::register_exception<Error>(m, "PhotonasError");
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());
  py::register_exception<DivergedError>(m, "DivergedError", base.ptr());

  m.attr("PHOTONAS_CODE") = std::string(kPhotoNasCode);
  m.attr("NUM_SLOTS") = kNumSlots;

  m.def("resolve_arch", [](const std::string& s) { return resolve_arch(s).to_string(); }, py::arg("code_or_preset"));
  m.def("preset_names", &preset_names);
  m.def("slot_name", &slot_name, py::arg("index"));
  m.def("op_fraction", [](const std::string& s) { return op_fraction(resolve_arch(s)); }, py::arg("code"));

  m.def(
      "wct",
      [](const FloatArray& content, const FloatArray& style, float epsilon, float blend, const std::string& kind) {
        return to_array(transfer::apply(to_tensor(content), to_tensor(style), transfer_config(epsilon, blend, kind)));
      },
      py::arg("content"), py::arg("style"), py::arg("epsilon") = 0.3f, py::arg("blend") = 1.0f,
      py::arg("kind") = "wct", "Feature transfer on (C, H, W) maps.");

  py::class_<NetworkGraph>(m, "Graph")
      .def_static(
          "build",
          [](const std::string& code, int base_width, std::uint64_t seed) {
            return build_graph(resolve_arch(code), base_width, seed);
          },
          py::arg("code") = "photonet", py::arg("base_width") = 8, py::arg("seed") = 0)
      .def_static("load", &load_graph, py::arg("path"))
      .def("save", [](const NetworkGraph& g, const std::string& path) { save_graph(g, path); }, py::arg("path"))
      .def_property_readonly("code", [](const NetworkGraph& g) { return g.code.to_string(); })
      .def_property_readonly("active_slots", &NetworkGraph::active_slots)
      .def_property_readonly("inert_slots", &NetworkGraph::inert_slots)
      .def_property_readonly("transfer_sites", [](const NetworkGraph& g) { return g.transfer_sites.size(); })
      .def(
          "forward",
          [](const NetworkGraph& g, const FloatArray& content, const FloatArray& style, float epsilon, float blend,
             const std::string& kind, bool any_size) {
            const auto cfg = transfer_config(epsilon, blend, kind);
            const Tensor c = to_tensor(content), s = to_tensor(style);
            py::gil_scoped_release release;
            Tensor out = any_size ? forward_any_size(g, c, s, cfg) : forward(g, c, s, cfg);
            py::gil_scoped_acquire acquire;
            return to_array(out);
          },
          py::arg("content"), py::arg("style"), py::arg("epsilon") = 0.3f, py::arg("blend") = 1.0f,
          py::arg("kind") = "wct", py::arg("any_size") = false)
      .def(
          "reconstruct", [](const NetworkGraph& g, const FloatArray& image) { return to_array(reconstruct_raw(g, to_tensor(image))); },
          py::arg("image"))
      .def(
          "flops",
          [](const NetworkGraph& g, int height, int width) {
            const FlopReport r = count_flops(g, height, width);
            return py::dict(py::arg("conv_macs") = r.conv_macs, py::arg("other_ops") = r.other_ops,
                            py::arg("total") = r.total());
          },
          py::arg("height"), py::arg("width"))
      .def("weights", [](const NetworkGraph& g) { return weights_to_dict(graph_weights(g)); })
      .def(
          "with_decoder_weights",
          [](const NetworkGraph& g, const py::dict& w) { return with_decoder_weights(g, dict_to_weights(w)); },
          py::arg("weights"))
      .def(
          "encode",
          [](const NetworkGraph& g, const FloatArray& image) {
            py::list taps;
            for (const Tensor& t : g.encoder->encode(to_tensor(image)).taps) taps.append(to_array(t));
            return taps;
          },
          py::arg("image"));

  m.def(
      "train_decoder",
      [](const NetworkGraph& g, const std::vector<FloatArray>& images, int steps, int batch, float lr,
         std::uint64_t seed) {
        Corpus corpus;
        for (const auto& a : images) corpus.images.push_back(to_tensor(a));
        TrainConfig cfg;
        cfg.steps = steps;
        cfg.batch = batch;
        cfg.learning_rate = lr;
        cfg.seed = seed;
        cfg.image_size = corpus.images.empty() ? 16 : corpus.images.front().dim(1);
        py::gil_scoped_release release;
        TrainResult r = train_decoder(g, corpus, cfg);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(std::move(r.graph), r.loss_trace);
      },
      py::arg("graph"), py::arg("images"), py::arg("steps") = 300, py::arg("batch") = 4, py::arg("lr") = 1e-3f,
      py::arg("seed") = 0, "Returns (trained graph, per-step loss trace).");
  m.def(
      "procedural_corpus",
      [](int count, int size, std::uint64_t seed) {
        std::vector<FloatArray> out;
        for (const Tensor& t : procedural_corpus(count, size, seed).images) out.push_back(to_array(t));
        return out;
      },
      py::arg("count"), py::arg("size"), py::arg("seed") = 0);
  m.def(
      "psnr", [](const FloatArray& a, const FloatArray& b) { return psnr(to_tensor(a), to_tensor(b)); }, py::arg("a"),
      py::arg("b"));

  m.def(
      "ssim", [](const FloatArray& a, const FloatArray& b) { return metrics::ssim(to_tensor(a), to_tensor(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "ssim_edge", [](const FloatArray& a, const FloatArray& b) { return metrics::ssim_edge(to_tensor(a), to_tensor(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "gram_loss",
      [](const FloatArray& result, const FloatArray& style, const NetworkGraph& g) {
        return metrics::gram_loss(to_tensor(result), to_tensor(style), *g.encoder);
      },
      py::arg("result"), py::arg("style"), py::arg("graph"));

  m.def("load_weights", [](const std::string& path) { return weights_to_dict(load_weights(path)); }, py::arg("path"));
  m.def(
      "save_weights", [](const py::dict& w, const std::string& path) { save_weights(dict_to_weights(w), path); },
      py::arg("weights"), py::arg("path"));
  m.def("read_ppm", [](const std::string& path) { return to_array(read_ppm(path)); }, py::arg("path"));
  m.def(
      "write_ppm", [](const FloatArray& image, const std::string& path) { write_ppm(to_tensor(image), path); },
      py::arg("image"), py::arg("path"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int rc;
        {
          py::gil_scoped_release release;
          rc = cli_dispatch(args, out, err);
        }
        return py::make_tuple(rc, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI invocation; returns (exit code, stdout text, stderr text).");
}
