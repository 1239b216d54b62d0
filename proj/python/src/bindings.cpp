// python/src/bindings.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "alignkit/cli.hpp"
#include "alignkit/corpus.hpp"
#include "alignkit/error.hpp"
#include "alignkit/extract.hpp"
#include "alignkit/formats.hpp"
#include "alignkit/ibm.hpp"
#include "alignkit/nmt_scores.hpp"
#include "alignkit/scorer.hpp"

namespace py = pybind11;
using namespace alignkit;

namespace {

using LinkList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;
using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Link> to_links(const LinkList& v) {
  std::vector<Link> out;
  for (const auto& [i, j] : v) out.push_back({i, j});
  return out;
}

LinkList from_links(const std::vector<Link>& v) {
  LinkList out;
  for (const auto& l : v) out.emplace_back(l.src, l.tgt);
  return out;
}

SoftAlignment to_soft(const Matrix& m, const std::string& space) {
  if (m.ndim() != 2) throw MalformedInput("score matrix must be two-dimensional");
  const auto rows = static_cast<std::size_t>(m.shape(0));
  const auto cols = static_cast<std::size_t>(m.shape(1));
  return SoftAlignment(rows, cols, parse_score_space(space),
                       std::vector<double>(m.data(), m.data() + rows * cols));
}

Matrix from_soft(const SoftAlignment& s) {
  Matrix out({s.rows(), s.cols()});
  std::copy(s.data().begin(), s.data().end(), out.mutable_data());
  return out;
}

SentencePair pair_of(const std::vector<std::string>& src, const std::vector<std::string>& tgt) {
  return make_pair(0, src, tgt);
}

}  // namespace

PYBIND11_MODULE(_alignkit, m) {
  m.doc() = "Word alignment toolkit";
  m.attr("__version__") = ALIGNKIT_VERSION;

  static py::exception<Error> error(m, "Error");
  py::register_exception<MalformedInput>(m, "MalformedInput", error);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", error);
  py::register_exception<ConfigError>(m, "ConfigError", error);
  py::register_exception<TrainingError>(m, "TrainingError", error);
  py::register_exception<FitError>(m, "FitError", error);
  static py::exception<BackendError> backend(m, "BackendError", error.ptr());
  py::register_exception<TimeoutError>(m, "TimeoutError", backend);
  py::register_exception<CapabilityError>(m, "CapabilityError", backend);

  m.def(
      "evaluate",
      [](std::size_t rows, std::size_t cols, const LinkList& hyp, const LinkList& sure,
         const LinkList& possible) {
        const HardAlignment h(rows, cols, to_links(hyp));
        const GoldAlignment g(rows, cols, to_links(sure), to_links(possible));
        const auto metrics = metrics_from_counts(count_links(h, g));
        return py::dict(py::arg("precision") = metrics.precision,
                        py::arg("recall") = metrics.recall, py::arg("aer") = metrics.aer);
      },
      py::arg("rows"), py::arg("cols"), py::arg("hyp"), py::arg("sure"),
      py::arg("possible") = LinkList{},
      "Precision, recall and AER of one sentence; sure links count as possible.");

  m.def(
      "parse_pharaoh",
      [](const std::string& line) {
        const auto l = alignkit::parse_pharaoh(line);
        return py::make_tuple(from_links(l.sure), from_links(l.possible_only));
      },
      "(sure, possible_only) link lists of one line.");
  m.def(
      "emit_pharaoh",
      [](std::size_t rows, std::size_t cols, const LinkList& links) {
        return alignkit::emit_pharaoh(HardAlignment(rows, cols, to_links(links)));
      },
      py::arg("rows"), py::arg("cols"), py::arg("links"));

  m.def(
      "extract",
      [](const Matrix& scores, const std::vector<std::string>& extractors,
         const std::string& space) {
        std::vector<ExtractorSpec> chain;
        for (const auto& e : extractors) chain.push_back(ExtractorSpec::parse(e));
        return from_links(extract_chain(to_soft(scores, space), chain, SetOp::Intersect).links());
      },
      py::arg("scores"), py::arg("extractors") = std::vector<std::string>{"a1"},
      py::arg("space") = "log", "Intersection of the extractors' links, e.g. ['a3:0.9'].");

  py::class_<ibm::LexiconModel>(m, "LexiconModel")
      .def_property_readonly("diagonal_tension", &ibm::LexiconModel::diagonal_tension)
      .def("prob", py::overload_cast<std::string_view, std::string_view>(
                       &ibm::LexiconModel::prob, py::const_),
           py::arg("src"), py::arg("tgt"))
      .def("save", py::overload_cast<const ibm::LexiconModel&, const std::string&>(
                       &ibm::save_model))
      .def_static("load", py::overload_cast<const std::string&>(&ibm::load_model))
      .def("posterior",
           [](const ibm::LexiconModel& model, const std::vector<std::string>& src,
              const std::vector<std::string>& tgt) {
             return from_soft(ibm::posterior_matrix(model, pair_of(src, tgt)));
           })
      .def("viterbi",
           [](const ibm::LexiconModel& model, const std::vector<std::string>& src,
              const std::vector<std::string>& tgt) {
             return from_links(ibm::viterbi_align(model, pair_of(src, tgt)).links());
           })
      .def("m1_scores",
           [](const ibm::LexiconModel& model, const std::vector<std::string>& src,
              const std::vector<std::string>& tgt) {
             BuiltinScorer scorer(std::make_shared<ibm::LexiconModel>(model));
             return from_soft(m1_scores(scorer, pair_of(src, tgt)));
           },
           "Log-probabilities of each one-token target given each one-token source.");

  m.def(
      "train_ibm",
      [](const std::vector<std::vector<std::string>>& src,
         const std::vector<std::vector<std::string>>& tgt, int iterations,
         double diagonal_tension) {
        if (src.size() != tgt.size()) throw MalformedInput("src and tgt differ in length");
        std::vector<SentencePair> pairs;
        for (std::size_t k = 0; k < src.size(); ++k) pairs.push_back(make_pair(k, src[k], tgt[k]));
        std::optional<ibm::TrainedLexicon> trained;
        {
          py::gil_scoped_release release;
          trained.emplace(ibm::train_em(pairs, iterations, diagonal_tension));
        }
        return py::make_tuple(std::move(trained->model), trained->log_likelihood);
      },
      py::arg("src"), py::arg("tgt"), py::arg("iterations") = 5,
      py::arg("diagonal_tension") = 0.0, "Returns (model, log-likelihood per iteration).");

  m.def(
      "synthetic_corpus",
      [](std::size_t pairs, std::uint64_t seed, double swap, double filler) {
        SyntheticConfig cfg;
        cfg.pairs = pairs;
        cfg.seed = seed;
        cfg.swap_probability = swap;
        cfg.filler_probability = filler;
        const auto syn = make_synthetic_corpus(cfg);
        py::list out;
        for (std::size_t k = 0; k < syn.corpus.pairs.size(); ++k)
          out.append(py::make_tuple(token_texts(syn.corpus.pairs[k].src),
                                    token_texts(syn.corpus.pairs[k].tgt),
                                    from_links(syn.corpus.gold[k].sure().links())));
        return out;
      },
      py::arg("pairs") = 500, py::arg("seed") = 1, py::arg("swap") = 0.3,
      py::arg("filler") = 0.0, "List of (src, tgt, gold links).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in process: (exit code, stdout, stderr).");
}
