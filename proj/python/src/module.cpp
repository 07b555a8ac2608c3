#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cova/config.hpp"
#include "cova/dataset.hpp"
#include "cova/error.hpp"
#include "cova/eval.hpp"
#include "cova/graph.hpp"
#include "cova/model.hpp"
#include "cova/synth.hpp"
#include "cova/train.hpp"
#include "cova/viz.hpp"

namespace py = pybind11;
using namespace cova;

namespace {

// Python dict -> flat key = value config; bools become true/false.
KvConfig to_kv_config(const py::dict& d) {
  KvConfig kv;
  for (auto item : d) {
    auto key = py::str(item.first).cast<std::string>();
    if (py::isinstance<py::bool_>(item.second)) {
      kv[key] = item.second.cast<bool>() ? "true" : "false";
    } else {
      kv[key] = py::str(item.second).cast<std::string>();
    }
  }
  return kv;
}

py::dict element_dict(const WebElement& e) {
  py::dict d;
  d["element_id"] = e.element_id;
  d["preorder_index"] = e.preorder_index;
  d["tag"] = e.tag;
  d["bbox"] = py::make_tuple(e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h);
  d["text"] = e.text ? py::cast(*e.text) : py::none();
  d["font_size"] = e.font_size ? py::cast(*e.font_size) : py::none();
  d["label"] = std::string(label_name(e.label));
  return d;
}

py::array_t<std::uint8_t> image_to_array(const Image& img) {
  py::array_t<std::uint8_t> a({img.height(), img.width(), 3});
  std::copy(img.bytes().begin(), img.bytes().end(), a.mutable_data());
  return a;
}

Image array_to_image(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeError("image must be an H x W x 3 uint8 array");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.bytes().begin());
  return img;
}

py::dict prediction_dict(const Prediction& p) {
  py::dict d;
  d["page_id"] = p.page_id;
  d["price"] = p.price_id;
  d["title"] = p.title_id;
  d["image"] = p.image_id;
  d["element_ids"] = p.element_ids;
  d["probs"] = p.probs;
  return d;
}

py::dict scores_dict(const ClassScores& s) {
  py::dict d;
  d["price"] = s[0];
  d["title"] = s[1];
  d["image"] = s[2];
  d["mean"] = mean_score(s);
  return d;
}

std::vector<const Webpage*> pointers(const std::vector<Webpage>& pages) {
  std::vector<const Webpage*> out;
  for (const auto& p : pages) out.push_back(&p);
  return out;
}

Image screenshot_for(const Webpage& page, const std::optional<py::array_t<std::uint8_t>>& image) {
  return image ? array_to_image(*image) : load_screenshot(page);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Context-aware visual extraction of price, title and image from rendered pages";

  auto base = py::register_exception<Error>(m, "CovaError");
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", validation.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", validation.ptr());
  py::register_exception<SpecError>(m, "SpecError", validation.ptr());
  py::register_exception<UnknownElementError>(m, "UnknownElementError", validation.ptr());
  py::register_exception<EmptyNeighborhoodError>(m, "EmptyNeighborhoodError", base.ptr());

  py::class_<Webpage>(m, "Webpage")
      .def_readonly("page_id", &Webpage::page_id)
      .def_readonly("domain", &Webpage::domain)
      .def_readonly("fully_labeled", &Webpage::fully_labeled)
      .def_property_readonly("screenshot_path", [](const Webpage& p) { return p.screenshot_ref; })
      .def_property_readonly("elements",
                             [](const Webpage& p) {
                               py::list out;
                               for (const auto& e : p.elements) out.append(element_dict(e));
                               return out;
                             })
      .def("labeled",
           [](const Webpage& p, const std::string& label) {
             auto l = label_from_name(label);
             if (!l) throw ConfigError("unknown label " + label);
             return p.labeled(*l);
           })
      .def("__len__", &Webpage::size)
      .def("__repr__", [](const Webpage& p) {
        return "<Webpage " + p.page_id + " (" + p.domain + ", " + std::to_string(p.size()) + " elements)>";
      });

  m.def(
      "parse_page",
      [](const std::string& raw, const std::string& page_id, const std::string& domain, std::optional<int> price,
         std::optional<int> title, std::optional<int> image) {
        Webpage w;
        w.page_id = page_id;
        w.domain = domain;
        w.dom = std::make_shared<const DomDump>(parse_dom_dump(raw));
        LabelManifest labels{page_id, price, title, image};
        w.elements = attach_labels(extract_leaves(*w.dom), labels);
        w.fully_labeled = labels.complete();
        return w;
      },
      py::arg("dom_json"), py::arg("page_id") = "page", py::arg("domain") = "", py::arg("price") = py::none(),
      py::arg("title") = py::none(), py::arg("image") = py::none(),
      "Validate a DOM dump and return its pruned leaves as a page.");

  m.def(
      "load_dataset",
      [](const std::filesystem::path& manifest, std::optional<std::filesystem::path> labels) {
        return load_dataset(manifest, labels).pages;
      },
      py::arg("manifest"), py::arg("labels") = py::none());

  m.def(
      "build_graph",
      [](const Webpage& page, int k, const std::string& metric) {
        return build_graph(page.elements, k, metric_from_name(metric), page.dom.get()).neighbors;
      },
      py::arg("page"), py::arg("k"), py::arg("metric") = "preorder",
      "Neighbour element ids of every element, sorted by preorder.");

  m.def(
      "synth_generate",
      [](const std::filesystem::path& out, const py::dict& spec) { generate(apply_synth_spec(to_kv_config(spec)), out); },
      py::arg("out"), py::arg("spec") = py::dict());
  m.def(
      "synth_page",
      [](const py::dict& spec, int index) {
        SynthPage sp = generate_page(apply_synth_spec(to_kv_config(spec)), index);
        return py::make_tuple(to_webpage(sp), image_to_array(sp.screenshot), serialize_dom_dump(sp.dom), sp.decoy_ids);
      },
      py::arg("spec"), py::arg("index"), "(page, screenshot, dom_json, decoy_ids) of one synthetic page.");

  m.def("softmax", &softmax, py::arg("logits"));
  m.def("attention_scores", &attention_scores, py::arg("v_i"), py::arg("neighbors"), py::arg("w1"), py::arg("w2"),
        py::arg("a"), py::arg("leaky_slope") = 0.01);

  m.def(
      "predict_page",
      [](const Mat& logits, const std::vector<int>& element_ids, const std::string& page_id) {
        return prediction_dict(predict_page(logits, element_ids, page_id));
      },
      py::arg("logits"), py::arg("element_ids"), py::arg("page_id") = "");

  m.def(
      "make_folds",
      [](const std::map<std::string, int>& counts, int n_folds, std::uint64_t seed) {
        py::list out;
        for (const auto& f : make_folds(counts, n_folds, seed)) {
          py::dict d;
          d["fold"] = f.fold_id;
          d["train"] = f.train_domains;
          d["val"] = f.val_domains;
          d["test"] = f.test_domains;
          out.append(d);
        }
        return out;
      },
      py::arg("domain_page_counts"), py::arg("n_folds") = 5, py::arg("seed") = 0);

  py::class_<CovaModel>(m, "Model")
      .def(py::init([](const py::dict& config, std::uint64_t seed) {
             return std::make_unique<CovaModel>(apply_train_config(to_kv_config(config)).model_config(), seed);
           }),
           py::arg("config") = py::dict(), py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& path) { return std::move(load_checkpoint(path).model); })
      .def("save", [](CovaModel& model, const std::filesystem::path& path) { save_checkpoint(path, model); })
      .def_property_readonly("param_names",
                             [](CovaModel& model) {
                               std::vector<std::string> names;
                               for (const auto& p : model.params()) names.push_back(p.name);
                               return names;
                             })
      .def("param", [](CovaModel& model, const std::string& name) -> Mat { return model.param(name).value; })
      .def(
          "forward",
          [](CovaModel& model, const Webpage& page, int k, std::optional<py::array_t<std::uint8_t>> image) {
            ContextGraph g = build_graph(page.elements, k);
            ForwardOutput out = model.forward_page_full(page, g, screenshot_for(page, image));
            py::dict d;
            d["logits"] = out.logits;
            d["visual"] = out.visual;
            d["context"] = out.context;
            py::dict attn;
            for (std::size_t i = 0; i < page.size(); ++i) {
              py::dict row;
              for (std::size_t j = 0; j < out.neighbor_rows[i].size(); ++j) {
                row[py::int_(page.elements[static_cast<std::size_t>(out.neighbor_rows[i][j])].element_id)] =
                    out.attention[i][j];
              }
              attn[py::int_(page.elements[i].element_id)] = row;
            }
            d["attention"] = attn;
            return d;
          },
          py::arg("page"), py::arg("k") = 24, py::arg("image") = py::none())
      .def(
          "predict",
          [](CovaModel& model, const Webpage& page, int k, std::optional<py::array_t<std::uint8_t>> image) {
            ContextGraph g = build_graph(page.elements, k);
            return prediction_dict(predict_page(model.forward_page(page, g, screenshot_for(page, image)), page));
          },
          py::arg("page"), py::arg("k") = 24, py::arg("image") = py::none());

  m.def(
      "train",
      [](const std::vector<Webpage>& train_pages, const std::vector<Webpage>& val_pages, const py::dict& config,
         std::optional<std::function<py::array_t<std::uint8_t>(const Webpage&)>> loader) {
        TrainOptions opt;
        if (loader) {
          auto fn = *loader;
          opt.loader = [fn](const Webpage& p) { return array_to_image(fn(p)); };
        }
        TrainResult r = train(pointers(train_pages), pointers(val_pages), apply_train_config(to_kv_config(config)), opt);
        py::list reports;
        for (const auto& rep : r.reports) reports.append(py::module_::import("json").attr("loads")(to_json(rep).dump()));
        return py::make_tuple(std::move(r.model), reports, r.best_epoch);
      },
      py::arg("train_pages"), py::arg("val_pages"), py::arg("config") = py::dict(), py::arg("loader") = py::none(),
      "Returns (model, epoch_reports, best_epoch). `loader(page)` may supply screenshots as arrays.");

  m.def(
      "evaluate",
      [](CovaModel& model, const std::vector<Webpage>& pages, int k, int topk) {
        auto ptrs = pointers(pages);
        auto preds = predict_pages(model, ptrs, k, DistanceMetric::Preorder);
        auto truth = truth_from_pages(ptrs);
        py::dict d;
        d["accuracy"] = scores_dict(cross_domain_accuracy(preds, truth));
        d["topk"] = scores_dict(topk_accuracy(preds, truth, topk));
        return d;
      },
      py::arg("model"), py::arg("pages"), py::arg("k") = 24, py::arg("topk") = 3);

  m.def(
      "render_attention",
      [](const Webpage& page, const py::array_t<std::uint8_t>& image, int element_id, const std::map<int, double>& attn,
         double threshold) {
        AttentionViz viz = render_attention(page, array_to_image(image), element_id, attn, threshold);
        return py::make_tuple(image_to_array(viz.image), viz.report.dump());
      },
      py::arg("page"), py::arg("image"), py::arg("element_id"), py::arg("attention"), py::arg("threshold") = 0.05,
      "(shaded image, JSON report).");
}
